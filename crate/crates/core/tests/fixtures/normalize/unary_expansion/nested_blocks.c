#include <stdio.h>


int main(void) {
    int i = 0;
    int odd = 0;
    while (i < 7) {
        if (i % 2 == 1) {
            odd++;
        } else {
            do {
                odd--;
            } while (0);
        }
        i++;
    }
    printf("%d\n", odd);
    return 0;
}
