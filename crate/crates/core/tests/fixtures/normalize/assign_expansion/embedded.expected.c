#include <stdio.h>

int main(void) {
    int x = 1;
    int y;
    y = (x = x + (3)) * 2;
    printf("%d %d\n", x, y);
    return 0;
}
