"""Pure-numpy kernels. Same contracts and operation order as the numba path."""

import numpy as np


def lu_factor(a, pivot_tol):
    """In-place LU with partial pivoting.

    Returns ``(perm, min_pivot, failed_col)``; ``failed_col`` is -1 on success,
    otherwise the column whose best pivot fell to ``pivot_tol`` or below.
    Zero multipliers and zero pivot-row entries are skipped, which makes the
    cost scale with the fill of banded matrices.
    """
    n = a.shape[0]
    perm = np.arange(n)
    min_pivot = np.inf
    for k in range(n):
        col = np.abs(a[k:, k])
        p = k + int(np.argmax(col))
        pv = col[p - k]
        if pv < min_pivot:
            min_pivot = pv
        if not pv > pivot_tol:
            return perm, pv, k
        if p != k:
            a[[k, p], :] = a[[p, k], :]
            perm[[k, p]] = perm[[p, k]]
        rows = k + 1 + np.flatnonzero(a[k + 1:, k])
        if rows.size == 0:
            continue
        a[rows, k] *= 1.0 / a[k, k]
        cols = k + 1 + np.flatnonzero(a[k, k + 1:])
        if cols.size:
            a[np.ix_(rows, cols)] -= np.outer(a[rows, k], a[k, cols])
    return perm, min_pivot, -1


def lu_substitute(lu, perm, b):
    n = lu.shape[0]
    x = b[perm].astype(np.float64)
    for i in range(1, n):
        x[i] -= lu[i, :i] @ x[:i]
    for i in range(n - 1, -1, -1):
        x[i] = (x[i] - lu[i, i + 1:] @ x[i + 1:]) / lu[i, i]
    return x


def split_skew_apply(coef, w, inv2h):
    """0.5 * (diag(coef) D + D diag(coef)) w with D the periodic central difference."""
    cw = coef * w
    dw = (np.roll(w, -1) - np.roll(w, 1)) * inv2h
    dcw = (np.roll(cw, -1) - np.roll(cw, 1)) * inv2h
    return 0.5 * (coef * dw + dcw)


def split_skew_matrix(coef, inv2h):
    n = coef.shape[0]
    m = np.zeros((n, n))
    idx = np.arange(n)
    ip = (idx + 1) % n
    im = (idx - 1) % n
    # row i: 0.5*inv2h*((c_i + c_{i+1}) w_{i+1} - (c_i + c_{i-1}) w_{i-1})
    np.add.at(m, (idx, ip), 0.5 * inv2h * (coef + coef[ip]))
    np.add.at(m, (idx, im), -0.5 * inv2h * (coef + coef[im]))
    return m


def third_difference_apply(w, inv2h3):
    return (np.roll(w, -2) - 2.0 * np.roll(w, -1) + 2.0 * np.roll(w, 1) - np.roll(w, 2)) * inv2h3


def third_difference_matrix(n, inv2h3):
    m = np.zeros((n, n))
    idx = np.arange(n)
    for shift, weight in ((2, 1.0), (1, -2.0), (-1, 2.0), (-2, -1.0)):
        np.add.at(m, (idx, (idx + shift) % n), weight * inv2h3)
    return m


def stage_system(ainv, tau, blocks):
    """Interleaved (point-major) matrix of ainv (x) I + tau * blockdiag(blocks).

    Unknown ``p * m + i`` is stage ``i`` at grid index ``p``.
    """
    m, n, _ = blocks.shape
    big = np.zeros((n * m, n * m))
    view = big.reshape(n, m, n, m)
    for i in range(m):
        view[:, i, :, i] = tau * blocks[i]
        for j in range(m):
            view[np.arange(n), i, np.arange(n), j] += ainv[i, j]
    return big
