#include <stdio.h>

int main(void) {
    int i = 0;
    int odd = 0;
    while (i < 7) {
        if (i % 2 == 1) {
            odd = odd + 1;
        } else {
            do {
                odd = odd - 1;
            } while (0);
        }
        i = i + 1;
    }
    printf("%d\n", odd);
    return 0;
}
