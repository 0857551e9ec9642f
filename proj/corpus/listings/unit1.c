int fun3(int a, int b);
int fun1(int a, int b) {
    int c;
    for (int i=0; i<10; i++)
        c += fun2(b + a, a - b);
    return c;
}
int fun2(int a, int b) {
    for (int i=0; i<30; i++) {
        a += fun3(a, b);
        b -= a;
    }
    return a+b;
}
