#include <stdio.h>
struct stats { double sum; int count; };

int main(void) {
    struct stats s = {0.0, 0};
    int i = 0;
    while (i < 4) {
        double __rw_sm0 = s.sum + i * 0.5;
        s.sum = __rw_sm0;
        int __rw_sm1 = s.count + 1;
        s.count = __rw_sm1;
        i = i + 1;
    }
    printf("%.2f %d\n", s.sum, s.count);
    return 0;
}
