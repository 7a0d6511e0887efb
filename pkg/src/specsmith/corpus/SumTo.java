class SumTo {
    //@ requires n >= 0;
    //@ ensures 2 * \result == n * (n + 1);
    static int sumTo(int n) {
        int total = 0;
        int i = 0;
        //@ maintaining 0 <= i && i <= n;
        //@ maintaining 2 * total == i * (i + 1);
        //@ decreases n - i;
        while (i < n) {
            i = i + 1;
            total = total + i;
        }
        return total;
    }
}
