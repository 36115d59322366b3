"""Compiled inner loops.

Every euclidean distance in the package goes through ``_euclid`` so that the
same pair always produces the same bits, whichever caller computed it.
"""

from math import sqrt

import numpy as np
from numba import njit


@njit(cache=True)
def _euclid(a, b):
    s = 0.0
    for t in range(a.shape[0]):
        diff = a[t] - b[t]
        s += diff * diff
    return sqrt(s)


@njit(cache=True)
def pair_distance(X, a, b):
    return _euclid(X[a], X[b])


@njit(cache=True)
def rows_to_points(X, q_ids, c_ids):
    out = np.empty((q_ids.shape[0], c_ids.shape[0]))
    for i in range(q_ids.shape[0]):
        for j in range(c_ids.shape[0]):
            out[i, j] = _euclid(X[q_ids[i]], X[c_ids[j]])
    return out


@njit(cache=True)
def nearest_cols(Q, CT):
    """Nearest column of ``CT`` (d x c) for each row of ``Q`` (m x d).

    Sums run in the same order as ``_euclid`` so the bits agree; the first
    minimum wins.
    """
    m = Q.shape[0]
    d, c = CT.shape
    best = np.empty(m)
    arg = np.empty(m, dtype=np.int64)
    tmp = np.empty(c)
    for i in range(m):
        for j in range(c):
            tmp[j] = 0.0
        for t in range(d):
            x = Q[i, t]
            row = CT[t]
            for j in range(c):
                diff = x - row[j]
                tmp[j] += diff * diff
        bd = np.inf
        bj = -1
        for j in range(c):
            dd = sqrt(tmp[j])
            if dd < bd:
                bd = dd
                bj = j
        best[i] = bd
        arg[i] = bj
    return best, arg


@njit(cache=True)
def two_nearest_from_rows(D):
    """Per row of ``D``: smallest value, its column, second smallest value."""
    m, c = D.shape
    d1 = np.empty(m)
    d2 = np.empty(m)
    a1 = np.empty(m, dtype=np.int64)
    for i in range(m):
        b1 = np.inf
        b2 = np.inf
        j1 = -1
        for j in range(c):
            v = D[i, j]
            if v < b1:
                b2 = b1
                b1 = v
                j1 = j
            elif v < b2:
                b2 = v
        d1[i] = b1
        d2[i] = b2
        a1[i] = j1
    return d1, a1, d2


@njit(cache=True)
def swap_costs_euclid(P, w, d1, a1, d2, u, k):
    """Weighted cost of the solution after adding point ``u`` and dropping slot j, for every j."""
    base = 0.0
    extra = np.zeros(k)
    pu = P[u]
    for i in range(P.shape[0]):
        du = _euclid(P[i], pu)
        keep = d1[i] if d1[i] < du else du
        alt = d2[i] if d2[i] < du else du
        base += w[i] * keep
        extra[a1[i]] += w[i] * (alt - keep)
    return base + extra


@njit(cache=True)
def swap_costs_row(du_row, w, d1, a1, d2, k):
    base = 0.0
    extra = np.zeros(k)
    for i in range(du_row.shape[0]):
        du = du_row[i]
        keep = d1[i] if d1[i] < du else du
        alt = d2[i] if d2[i] < du else du
        base += w[i] * keep
        extra[a1[i]] += w[i] * (alt - keep)
    return base + extra


@njit(cache=True)
def enumerate_subsets(D, w, k):
    """Exhaustive k-subset search over the columns of the square matrix ``D``.

    Returns (best weighted sum, its subset, best max, its subset). Subsets are
    visited in lexicographic order and only strict improvements replace the
    incumbent, so the lexicographically smallest optimum is reported.
    """
    n = D.shape[0]
    mins = np.empty((k + 1, n))
    for i in range(n):
        mins[0, i] = np.inf
    idx = np.empty(k, dtype=np.int64)
    best_sum = np.inf
    best_max = np.inf
    arg_sum = np.zeros(k, dtype=np.int64)
    arg_max = np.zeros(k, dtype=np.int64)
    depth = 0
    idx[0] = 0
    while depth >= 0:
        if idx[depth] > n - (k - depth):
            depth -= 1
            if depth >= 0:
                idx[depth] += 1
            continue
        c = idx[depth]
        for i in range(n):
            v = D[i, c]
            prev = mins[depth, i]
            mins[depth + 1, i] = v if v < prev else prev
        if depth == k - 1:
            s = 0.0
            mx = 0.0
            for i in range(n):
                v = mins[k, i]
                s += w[i] * v
                if v > mx:
                    mx = v
            if s < best_sum:
                best_sum = s
                arg_sum[:] = idx
            if mx < best_max:
                best_max = mx
                arg_max[:] = idx
            idx[depth] += 1
        else:
            depth += 1
            idx[depth] = idx[depth - 1] + 1
    return best_sum, arg_sum, best_max, arg_max
