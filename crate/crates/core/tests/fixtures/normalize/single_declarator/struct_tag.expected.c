#include <stdio.h>
struct pt { int x; int y; } p1;
struct pt p2;

int main(void) {
    p1.x = 1;
    p2.y = p1.x + 4;
    printf("%d %d\n", p1.x, p2.y);
    return 0;
}
