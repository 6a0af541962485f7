"""numba int64 Smith normal form kernel.

Same elimination order and pivot rule as _snf_py.snf_transforms, so the two
backends agree entry for entry whenever this one succeeds.  Entries are
guarded against int64 overflow: whenever any magnitude crosses LIMIT the
kernel reports failure and the caller reruns the exact Python backend.
"""

import numpy as np
from numba import njit

# products of two entries bounded by LIMIT**2 < 2**62; sums of two such fit.
LIMIT = np.int64(1) << 31


@njit(cache=True)
def _xgcd(a, b):
    x, nx = np.int64(1), np.int64(0)
    y, ny = np.int64(0), np.int64(1)
    g, ng = a, b
    while ng != 0:
        q = g // ng
        x, nx = nx, x - q * nx
        y, ny = ny, y - q * ny
        g, ng = ng, g - q * ng
    if g < 0:
        x, y, g = -x, -y, -g
    return g, x, y


@njit(cache=True)
def _maxabs(D, U, V):
    best = np.int64(0)
    for A in (D, U, V):
        for i in range(A.shape[0]):
            for j in range(A.shape[1]):
                a = A[i, j]
                if a < 0:
                    a = -a
                if a > best:
                    best = a
    return best


@njit(cache=True)
def snf_kernel(D, U, V):
    """In-place SNF of D with transforms accumulated into U, V.
    Returns True on success, False when an overflow guard tripped."""
    m, n = D.shape
    r = min(m, n)
    for k in range(r):
        # pivot: smallest |entry|, then lowest row, then lowest column
        bi = -1
        bj = -1
        best = np.int64(0)
        for i in range(k, m):
            for j in range(k, n):
                a = D[i, j]
                if a != 0:
                    if a < 0:
                        a = -a
                    if bi < 0 or a < best:
                        best, bi, bj = a, i, j
        if bi < 0:
            break
        if bi != k:
            for t in range(n):
                D[k, t], D[bi, t] = D[bi, t], D[k, t]
            for t in range(m):
                U[k, t], U[bi, t] = U[bi, t], U[k, t]
        if bj != k:
            for t in range(m):
                D[t, k], D[t, bj] = D[t, bj], D[t, k]
            for t in range(n):
                V[t, k], V[t, bj] = V[t, bj], V[t, k]
        while True:
            if _maxabs(D, U, V) > LIMIT:
                return False
            for i in range(k + 1, m):
                a, b = D[k, k], D[i, k]
                if b == 0:
                    continue
                if b % a == 0:
                    q = -(b // a)
                    for t in range(n):
                        D[i, t] += q * D[k, t]
                    for t in range(m):
                        U[i, t] += q * U[k, t]
                else:
                    g, x, y = _xgcd(a, b)
                    xb, yb = -(b // g), a // g
                    for t in range(n):
                        aa, bb = D[k, t], D[i, t]
                        D[k, t] = x * aa + y * bb
                        D[i, t] = xb * aa + yb * bb
                    for t in range(m):
                        aa, bb = U[k, t], U[i, t]
                        U[k, t] = x * aa + y * bb
                        U[i, t] = xb * aa + yb * bb
            row_clear = True
            for j in range(k + 1, n):
                if D[k, j] != 0:
                    row_clear = False
                    break
            if row_clear:
                break
            if _maxabs(D, U, V) > LIMIT:
                return False
            for j in range(k + 1, n):
                a, b = D[k, k], D[k, j]
                if b == 0:
                    continue
                if b % a == 0:
                    q = -(b // a)
                    for t in range(m):
                        D[t, j] += q * D[t, k]
                    for t in range(n):
                        V[t, j] += q * V[t, k]
                else:
                    g, x, y = _xgcd(a, b)
                    xb, yb = -(b // g), a // g
                    for t in range(m):
                        aa, bb = D[t, k], D[t, j]
                        D[t, k] = x * aa + y * bb
                        D[t, j] = xb * aa + yb * bb
                    for t in range(n):
                        aa, bb = V[t, k], V[t, j]
                        V[t, k] = x * aa + y * bb
                        V[t, j] = xb * aa + yb * bb
            col_clear = True
            for i in range(k + 1, m):
                if D[i, k] != 0:
                    col_clear = False
                    break
            if col_clear:
                break
        if D[k, k] < 0:
            for t in range(n):
                D[k, t] = -D[k, t]
            for t in range(m):
                U[k, t] = -U[k, t]

    changed = True
    while changed:
        changed = False
        if _maxabs(D, U, V) > LIMIT:
            return False
        for k in range(r - 1):
            a, b = D[k, k], D[k + 1, k + 1]
            if a == 0 and b != 0:
                for t in range(n):
                    D[k, t], D[k + 1, t] = D[k + 1, t], D[k, t]
                for t in range(m):
                    U[k, t], U[k + 1, t] = U[k + 1, t], U[k, t]
                for t in range(m):
                    D[t, k], D[t, k + 1] = D[t, k + 1], D[t, k]
                for t in range(n):
                    V[t, k], V[t, k + 1] = V[t, k + 1], V[t, k]
                a, b = D[k, k], D[k + 1, k + 1]
                changed = True
            if a != 0 and b % a != 0:
                for t in range(m):
                    D[t, k] += D[t, k + 1]
                for t in range(n):
                    V[t, k] += V[t, k + 1]
                g, x, y = _xgcd(a, b)
                xb, yb = -(b // g), a // g
                for t in range(n):
                    aa, bb = D[k, t], D[k + 1, t]
                    D[k, t] = x * aa + y * bb
                    D[k + 1, t] = xb * aa + yb * bb
                for t in range(m):
                    aa, bb = U[k, t], U[k + 1, t]
                    U[k, t] = x * aa + y * bb
                    U[k + 1, t] = xb * aa + yb * bb
                q = -(D[k, k + 1] // D[k, k])
                for t in range(m):
                    D[t, k + 1] += q * D[t, k]
                for t in range(n):
                    V[t, k + 1] += q * V[t, k]
                if D[k + 1, k + 1] < 0:
                    for t in range(n):
                        D[k + 1, t] = -D[k + 1, t]
                    for t in range(m):
                        U[k + 1, t] = -U[k + 1, t]
                changed = True
    return True


def snf_transforms_int64(mat):
    """numba-backed SNF; returns None when the overflow guard trips."""
    m = len(mat)
    n = len(mat[0]) if m else 0
    D = np.array(mat, dtype=np.int64).reshape(m, n)
    U = np.eye(m, dtype=np.int64)
    V = np.eye(n, dtype=np.int64)
    if not snf_kernel(D, U, V):
        return None
    return U.tolist(), D.tolist(), V.tolist()


@njit(cache=True)
def _diag_kernel(D):
    m, n = D.shape
    r = min(m, n)
    for k in range(r):
        bi = -1
        bj = -1
        best = np.int64(0)
        for i in range(k, m):
            for j in range(k, n):
                a = D[i, j]
                if a != 0:
                    if a < 0:
                        a = -a
                    if bi < 0 or a < best:
                        best, bi, bj = a, i, j
        if bi < 0:
            break
        if bi != k:
            for t in range(n):
                D[k, t], D[bi, t] = D[bi, t], D[k, t]
        if bj != k:
            for t in range(m):
                D[t, k], D[t, bj] = D[t, bj], D[t, k]
        while True:
            big = np.int64(0)
            for i in range(k, m):
                for j in range(k, n):
                    a = D[i, j]
                    if a < 0:
                        a = -a
                    if a > big:
                        big = a
            if big > LIMIT:
                return False
            for i in range(k + 1, m):
                a, b = D[k, k], D[i, k]
                if b == 0:
                    continue
                if b % a == 0:
                    q = b // a
                    for t in range(k, n):
                        D[i, t] -= q * D[k, t]
                else:
                    g, x, y = _xgcd(a, b)
                    xb, yb = -(b // g), a // g
                    for t in range(k, n):
                        aa, bb = D[k, t], D[i, t]
                        D[k, t] = x * aa + y * bb
                        D[i, t] = xb * aa + yb * bb
            row_clear = True
            for j in range(k + 1, n):
                if D[k, j] != 0:
                    row_clear = False
                    break
            if row_clear:
                break
            for j in range(k + 1, n):
                a, b = D[k, k], D[k, j]
                if b == 0:
                    continue
                if b % a == 0:
                    q = b // a
                    for t in range(k, m):
                        D[t, j] -= q * D[t, k]
                else:
                    g, x, y = _xgcd(a, b)
                    xb, yb = -(b // g), a // g
                    for t in range(k, m):
                        aa, bb = D[t, k], D[t, j]
                        D[t, k] = x * aa + y * bb
                        D[t, j] = xb * aa + yb * bb
            col_clear = True
            for i in range(k + 1, m):
                if D[i, k] != 0:
                    col_clear = False
                    break
            if col_clear:
                break
    return True


def snf_diagonal_int64(mat):
    from math import gcd

    m = len(mat)
    n = len(mat[0]) if m else 0
    D = np.array(mat, dtype=np.int64).reshape(m, n)
    if not _diag_kernel(D):
        return None
    r = min(m, n)
    diag = [abs(int(D[i, i])) for i in range(r)]
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
