"""numba kernels. Contracts match :mod:`quasistep.kernels._numpy`."""

import numpy as np

from .._backend import njit


@njit
def lu_factor(a, pivot_tol):
    n = a.shape[0]
    perm = np.arange(n)
    min_pivot = np.inf
    cols = np.empty(n, dtype=np.int64)
    for k in range(n):
        p = k
        pv = abs(a[k, k])
        for i in range(k + 1, n):
            v = abs(a[i, k])
            if v > pv:
                pv = v
                p = i
        if pv < min_pivot:
            min_pivot = pv
        if not pv > pivot_tol:
            return perm, pv, k
        if p != k:
            for j in range(n):
                t = a[k, j]
                a[k, j] = a[p, j]
                a[p, j] = t
            t2 = perm[k]
            perm[k] = perm[p]
            perm[p] = t2
        ncols = 0
        for j in range(k + 1, n):
            if a[k, j] != 0.0:
                cols[ncols] = j
                ncols += 1
        inv = 1.0 / a[k, k]
        for i in range(k + 1, n):
            if a[i, k] != 0.0:
                a[i, k] *= inv
                f = a[i, k]
                for jj in range(ncols):
                    j = cols[jj]
                    a[i, j] -= f * a[k, j]
    return perm, min_pivot, -1


@njit
def lu_substitute(lu, perm, b):
    n = lu.shape[0]
    x = np.empty(n)
    for i in range(n):
        x[i] = b[perm[i]]
    for i in range(1, n):
        s = x[i]
        for j in range(i):
            s -= lu[i, j] * x[j]
        x[i] = s
    for i in range(n - 1, -1, -1):
        s = x[i]
        for j in range(i + 1, n):
            s -= lu[i, j] * x[j]
        x[i] = s / lu[i, i]
    return x


@njit
def split_skew_apply(coef, w, inv2h):
    n = w.shape[0]
    out = np.empty(n)
    for i in range(n):
        ip = i + 1 if i + 1 < n else 0
        im = i - 1 if i > 0 else n - 1
        dw = (w[ip] - w[im]) * inv2h
        dcw = (coef[ip] * w[ip] - coef[im] * w[im]) * inv2h
        out[i] = 0.5 * (coef[i] * dw + dcw)
    return out


@njit
def split_skew_matrix(coef, inv2h):
    n = coef.shape[0]
    m = np.zeros((n, n))
    for i in range(n):
        ip = (i + 1) % n
        im = (i - 1) % n
        m[i, ip] += 0.5 * inv2h * (coef[i] + coef[ip])
        m[i, im] += -0.5 * inv2h * (coef[i] + coef[im])
    return m


@njit
def third_difference_apply(w, inv2h3):
    n = w.shape[0]
    out = np.empty(n)
    for i in range(n):
        out[i] = (w[(i + 2) % n] - 2.0 * w[(i + 1) % n]
                  + 2.0 * w[(i - 1) % n] - w[(i - 2) % n]) * inv2h3
    return out


@njit
def third_difference_matrix(n, inv2h3):
    m = np.zeros((n, n))
    for i in range(n):
        m[i, (i + 2) % n] += 1.0 * inv2h3
        m[i, (i + 1) % n] += -2.0 * inv2h3
        m[i, (i - 1) % n] += 2.0 * inv2h3
        m[i, (i - 2) % n] += -1.0 * inv2h3
    return m


@njit
def stage_system(ainv, tau, blocks):
    m = blocks.shape[0]
    n = blocks.shape[1]
    big = np.zeros((n * m, n * m))
    for i in range(m):
        b = blocks[i]
        for p in range(n):
            for q in range(n):
                v = b[p, q]
                if v != 0.0:
                    big[p * m + i, q * m + i] = tau * v
    for p in range(n):
        for i in range(m):
            for j in range(m):
                big[p * m + i, p * m + j] += ainv[i, j]
    return big
