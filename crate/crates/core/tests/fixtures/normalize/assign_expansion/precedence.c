#include <stdio.h>


int main(void) {
    int x = 3;
    int y = 4;
    x *= y + 1;
    y -= x - 10;
    printf("%d %d\n", x, y);
    return 0;
}
