#include <stdio.h>
int g1 = 1;
int g2;
int g3 = 3;
double scale = 0.5;
double offset;

int main(void) {
    g2 = g1 + g3;
    offset = scale * g2;
    printf("%d %d %d %.2f\n", g1, g2, g3, offset);
    return 0;
}
