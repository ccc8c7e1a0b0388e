"""Numba coordinate-descent kernels for 0.5 * sum w (z - X b)^2 + sum t_j |b_j|.

``r`` holds the working residual z - X b and is updated in place together
with ``beta``.  Sweeps alternate between full passes and passes over the
current active set; the loop stops when a full pass moves no coordinate by
more than ``tol`` in the sqrt(sum w x_j^2)-scaled norm.  ``hist`` receives the
objective after every sweep.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _soft(a, t):
    if a > t:
        return a - t
    if a < -t:
        return a + t
    return 0.0


@njit(cache=True, nogil=True)
def _objective(w, r, beta, thresh):
    s = 0.0
    for i in range(r.shape[0]):
        s += w[i] * r[i] * r[i]
    s *= 0.5
    for j in range(beta.shape[0]):
        if beta[j] != 0.0:
            s += thresh[j] * abs(beta[j])
    return s


@njit(cache=True, nogil=True)
def cd_dense(X, w, r, beta, thresh, skip, xwx, max_sweeps, tol, hist):
    n, p = X.shape
    active = np.zeros(p, dtype=np.bool_)
    full = True
    sweeps = 0
    while sweeps < max_sweeps:
        worst = 0.0
        for j in range(p):
            if skip[j] or xwx[j] <= 0.0:
                continue
            if not full and not active[j]:
                continue
            bj = beta[j]
            g = 0.0
            for i in range(n):
                g += w[i] * X[i, j] * r[i]
            new = _soft(g + xwx[j] * bj, thresh[j]) / xwx[j]
            d = new - bj
            if d != 0.0:
                for i in range(n):
                    r[i] -= d * X[i, j]
                beta[j] = new
                move = abs(d) * np.sqrt(xwx[j])
                if move > worst:
                    worst = move
            if new != 0.0:
                active[j] = True
        hist[sweeps] = _objective(w, r, beta, thresh)
        sweeps += 1
        if worst < tol:
            if full:
                break
            full = True
        else:
            full = False
    return sweeps


@njit(cache=True, nogil=True)
def cd_sparse(indptr, indices, data, w, r, beta, thresh, skip, xwx, max_sweeps, tol, hist):
    p = indptr.shape[0] - 1
    active = np.zeros(p, dtype=np.bool_)
    full = True
    sweeps = 0
    while sweeps < max_sweeps:
        worst = 0.0
        for j in range(p):
            if skip[j] or xwx[j] <= 0.0:
                continue
            if not full and not active[j]:
                continue
            bj = beta[j]
            g = 0.0
            for k in range(indptr[j], indptr[j + 1]):
                i = indices[k]
                g += w[i] * data[k] * r[i]
            new = _soft(g + xwx[j] * bj, thresh[j]) / xwx[j]
            d = new - bj
            if d != 0.0:
                for k in range(indptr[j], indptr[j + 1]):
                    r[indices[k]] -= d * data[k]
                beta[j] = new
                move = abs(d) * np.sqrt(xwx[j])
                if move > worst:
                    worst = move
            if new != 0.0:
                active[j] = True
        hist[sweeps] = _objective(w, r, beta, thresh)
        sweeps += 1
        if worst < tol:
            if full:
                break
            full = True
        else:
            full = False
    return sweeps
