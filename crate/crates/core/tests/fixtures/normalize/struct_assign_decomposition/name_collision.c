#include <stdio.h>


struct s {
    int m;
};

int main(void) {
    int __rw_sm0 = 7;
    struct s v;
    v.m = __rw_sm0 * 2;
    printf("%d %d\n", v.m, __rw_sm0);
    return 0;
}
