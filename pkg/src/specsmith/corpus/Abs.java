class Abs {
    //@ requires x > -1000000;
    //@ ensures \result >= 0;
    //@ ensures \result == x || \result == -x;
    static int abs(int x) {
        if (x < 0) {
            return -x;
        }
        return x;
    }
}
