#include <stdio.h>


struct buf {
    int arr[3];
    int len;
};

int main(void) {
    struct buf b;
    b.arr[1] = 4;
    b.len = 1;
    printf("%d %d\n", b.arr[1], b.len);
    return 0;
}
