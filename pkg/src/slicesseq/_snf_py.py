"""Exact Smith normal form over Z with unbounded Python integers.

Reference backend: always correct, never overflows.  The numba backend in
_snf_numba.py mirrors this algorithm step for step so both produce identical
transforms; it bails out to this one when int64 magnitudes get risky.
"""

from math import gcd


def _xgcd(a, b):
    x, nx = 1, 0
    y, ny = 0, 1
    g, ng = a, b
    while ng:
        q = g // ng
        x, nx = nx, x - q * nx
        y, ny = ny, y - q * ny
        g, ng = ng, g - q * ng
    if g < 0:
        x, y, g = -x, -y, -g
    return g, x, y


def snf_diagonal(mat):
    """Invariant factors of `mat` without transform tracking (cheaper and far
    less coefficient growth).  Returns the full diagonal of length min(m,n)."""
    m = len(mat)
    n = len(mat[0]) if m else 0
    D = [row[:] for row in mat]
    r = min(m, n)
    for k in range(r):
        # pivot
        bi = bj = -1
        best = 0
        for i in range(k, m):
            Di = D[i]
            for j in range(k, n):
                a = Di[j]
                if a:
                    a = -a if a < 0 else a
                    if bi < 0 or a < best:
                        best, bi, bj = a, i, j
        if bi < 0:
            break
        D[k], D[bi] = D[bi], D[k]
        if bj != k:
            for row in D:
                row[k], row[bj] = row[bj], row[k]
        while True:
            for i in range(k + 1, m):
                a, b = D[k][k], D[i][k]
                if b == 0:
                    continue
                if b % a == 0:
                    q = b // a
                    Di, Dk = D[i], D[k]
                    for t in range(k, n):
                        Di[t] -= q * Dk[t]
                else:
                    g, x, y = _xgcd(a, b)
                    xb, yb = -(b // g), a // g
                    Di, Dk = D[i], D[k]
                    for t in range(k, n):
                        aa, bb = Dk[t], Di[t]
                        Dk[t] = x * aa + y * bb
                        Di[t] = xb * aa + yb * bb
            if all(D[k][j] == 0 for j in range(k + 1, n)):
                break
            for j in range(k + 1, n):
                a, b = D[k][k], D[k][j]
                if b == 0:
                    continue
                if b % a == 0:
                    q = b // a
                    for row in D:
                        row[j] -= q * row[k]
                else:
                    g, x, y = _xgcd(a, b)
                    xb, yb = -(b // g), a // g
                    for row in D:
                        aa, bb = row[k], row[j]
                        row[k] = x * aa + y * bb
                        row[j] = xb * aa + yb * bb
            if all(D[i][k] == 0 for i in range(k + 1, m)):
                break
    diag = [abs(D[i][i]) for i in range(r)]
    # enforce divisibility
    for i in range(r):
        for j in range(i + 1, r):
            a, b = diag[i], diag[j]
            if a == 0 and b != 0:
                diag[i], diag[j] = b, 0
                a, b = diag[i], diag[j]
            if a and b and b % a:
                g = gcd(a, b)
                diag[i], diag[j] = g, a * b // g
    return diag


def snf_transforms(mat):
    """Return (U, D, V) with U*mat*V = D, U, V unimodular, D a diagonal
    divisibility chain.  Pivot rule: smallest |entry|, then lowest row,
    then lowest column.  `mat` is a list of lists of ints; not mutated."""
    m = len(mat)
    n = len(mat[0]) if m else 0
    D = [row[:] for row in mat]
    U = [[1 if i == j else 0 for j in range(m)] for i in range(m)]
    V = [[1 if i == j else 0 for j in range(n)] for i in range(n)]

    def swap_rows(i, j):
        if i != j:
            D[i], D[j] = D[j], D[i]
            U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        if i != j:
            for row in D:
                row[i], row[j] = row[j], row[i]
            for row in V:
                row[i], row[j] = row[j], row[i]

    def addmul_row(dst, src, c):
        # row_dst += c * row_src
        Dd, Ds = D[dst], D[src]
        for t in range(n):
            Dd[t] += c * Ds[t]
        Ud, Us = U[dst], U[src]
        for t in range(m):
            Ud[t] += c * Us[t]

    def addmul_col(dst, src, c):
        for row in D:
            row[dst] += c * row[src]
        for row in V:
            row[dst] += c * row[src]

    def combine_rows(i, j, x, y, xb, yb):
        # (row_i, row_j) <- (x*row_i + y*row_j, xb*row_i + yb*row_j)
        Di, Dj = D[i], D[j]
        for t in range(n):
            a, b = Di[t], Dj[t]
            Di[t] = x * a + y * b
            Dj[t] = xb * a + yb * b
        Ui, Uj = U[i], U[j]
        for t in range(m):
            a, b = Ui[t], Uj[t]
            Ui[t] = x * a + y * b
            Uj[t] = xb * a + yb * b

    def combine_cols(i, j, x, y, xb, yb):
        for row in D:
            a, b = row[i], row[j]
            row[i] = x * a + y * b
            row[j] = xb * a + yb * b
        for row in V:
            a, b = row[i], row[j]
            row[i] = x * a + y * b
            row[j] = xb * a + yb * b

    def find_pivot(k):
        bi = bj = -1
        best = 0
        for i in range(k, m):
            Di = D[i]
            for j in range(k, n):
                a = Di[j]
                if a != 0:
                    a = -a if a < 0 else a
                    if bi < 0 or a < best:
                        best, bi, bj = a, i, j
        return bi, bj

    r = min(m, n)
    for k in range(r):
        bi, bj = find_pivot(k)
        if bi < 0:
            break
        swap_rows(k, bi)
        swap_cols(k, bj)
        while True:
            # clear column k below the pivot
            for i in range(k + 1, m):
                a, b = D[k][k], D[i][k]
                if b == 0:
                    continue
                if b % a == 0:
                    addmul_row(i, k, -(b // a))
                else:
                    g, x, y = _xgcd(a, b)
                    combine_rows(k, i, x, y, -(b // g), a // g)
            if all(D[k][j] == 0 for j in range(k + 1, n)):
                break
            # clear row k right of the pivot
            for j in range(k + 1, n):
                a, b = D[k][k], D[k][j]
                if b == 0:
                    continue
                if b % a == 0:
                    addmul_col(j, k, -(b // a))
                else:
                    g, x, y = _xgcd(a, b)
                    combine_cols(k, j, x, y, -(b // g), a // g)
            if all(D[i][k] == 0 for i in range(k + 1, m)):
                break
        if D[k][k] < 0:
            addmul_row(k, k, -2)

    # enforce the divisibility chain d_k | d_{k+1}
    changed = True
    while changed:
        changed = False
        for k in range(r - 1):
            a, b = D[k][k], D[k + 1][k + 1]
            if a == 0 and b != 0:
                swap_rows(k, k + 1)
                swap_cols(k, k + 1)
                a, b = D[k][k], D[k + 1][k + 1]
                changed = True
            if a != 0 and b % a != 0:
                addmul_col(k, k + 1, 1)
                g, x, y = _xgcd(a, b)
                combine_rows(k, k + 1, x, y, -(b // g), a // g)
                # clear the fill-in at (k, k+1)
                addmul_col(k + 1, k, -(D[k][k + 1] // D[k][k]))
                if D[k + 1][k + 1] < 0:
                    addmul_row(k + 1, k + 1, -2)
                changed = True
    return U, D, V
