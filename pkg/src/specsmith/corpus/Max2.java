class Max2 {
    //@ ensures \result >= a && \result >= b;
    //@ ensures \result == a || \result == b;
    static int max(int a, int b) {
        if (a >= b) {
            return a;
        }
        return b;
    }
}
