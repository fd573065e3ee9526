#include <stdio.h>


int main(void) {
    double xs[3] = {1.0, 2.0, 3.0}, y = 0.5;
    int n[2], m = 7;
    n[0] = m;
    n[1] = m * 2;
    printf("%.1f %.1f %d %d\n", xs[2] * y, y, n[0], n[1]);
    return 0;
}
