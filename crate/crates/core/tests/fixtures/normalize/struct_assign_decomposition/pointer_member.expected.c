#include <stdio.h>
struct node { int *target; int hits; };

int main(void) {
    int x = 8;
    struct node n;
    n.target = &x;
    int __rw_sm0 = *n.target + 1;
    n.hits = __rw_sm0;
    printf("%d\n", n.hits);
    return 0;
}
