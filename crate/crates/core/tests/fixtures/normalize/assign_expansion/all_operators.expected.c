#include <stdio.h>

int main(void) {
    int x = 100;
    unsigned int m = 0xF0;
    x = x - (3);
    x = x * (2);
    x = x / (5);
    x = x % (7);
    m = m << (2);
    m = m >> (1);
    m = m & (0x1F0);
    m = m ^ (0x0F);
    m = m | (0x100);
    printf("%d %u\n", x, m);
    return 0;
}
