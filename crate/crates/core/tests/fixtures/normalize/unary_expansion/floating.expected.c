#include <stdio.h>

int main(void) {
    double d = 0.25;
    float f = 1.5f;
    d = d + 1;
    f = f - 1;
    printf("%.2f %.2f\n", d, f);
    return 0;
}
