class Contains {
    //@ requires a != null;
    //@ ensures \result <==> (\exists int k; 0 <= k && k < a.length; a[k] == x);
    static boolean contains(int[] a, int x) {
        int i = 0;
        //@ maintaining 0 <= i && i <= a.length;
        //@ maintaining (\forall int k; 0 <= k && k < i; a[k] != x);
        //@ decreases a.length - i;
        while (i < a.length) {
            if (a[i] == x) {
                return true;
            }
            i = i + 1;
        }
        return false;
    }
}
