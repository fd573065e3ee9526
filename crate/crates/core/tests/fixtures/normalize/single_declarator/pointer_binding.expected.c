#include <stdio.h>

int main(void) {
    int x = 3;
    int *p = &x;
    int q = 4;
    *p = *p + q;
    printf("%d %d\n", x, q);
    return 0;
}
