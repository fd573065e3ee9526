#include <stdio.h>


int total;

void add(int v) {
    if (v < 0) {
        return;
    }
    total = total + v;
    return;
}

int main(void) {
    add(3);
    add(-2);
    printf("%d\n", total);
    return 0;
}
