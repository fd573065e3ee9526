#include <stdio.h>


int find(int *xs, int n, int key) {
    int i;
    for (i = 0; i < n; i = i + 1) {
        if (xs[i] == key) {
            return i + 100;
        }
    }
    return -1;
}

int main(void) {
    int xs[4] = {3, 8, 1, 9};
    printf("%d %d\n", find(xs, 4, 1), find(xs, 4, 7));
    return 0;
}
