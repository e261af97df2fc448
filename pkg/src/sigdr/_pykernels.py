"""Pure-Python/numpy versions of the compiled kernels in ``_ckernels.pyx``.

Same call signatures; used when the extension is unavailable or
``SIGDR_BACKEND=python`` is set. The signature and PDE kernels follow the
compiled operation order exactly (bit-identical results); ``lasso_cd`` uses
numpy dot products and agrees to rounding only.
"""
from __future__ import annotations

import numpy as np


def _offsets(d, n):
    offs = [0]
    size = 1
    for _ in range(n + 1):
        offs.append(offs[-1] + size)
        size *= d
    return offs


def _mul_exp(S, v, n, offs):
    for k in range(n, 0, -1):
        tmp = S[0] * v / k
        for j in range(1, k):
            inv = 1.0 / (k - j)
            s = (S[offs[j]:offs[j + 1]] + tmp) * inv
            tmp = np.outer(s, v).ravel()
        S[offs[k]:offs[k + 1]] += tmp


def sig_stream(inc, level, stream=False):
    inc = np.ascontiguousarray(inc, dtype=np.float64)
    L, d = inc.shape
    offs = _offsets(d, level)
    T = offs[-1]
    S = np.zeros(T)
    S[0] = 1.0
    out = np.zeros((L + 1, T)) if stream else None
    if stream:
        out[0, 0] = 1.0
    for t in range(L):
        v = inc[t]
        if np.any(v != 0.0):
            _mul_exp(S, v, level, offs)
        if stream:
            out[t + 1] = S
    return out if stream else S


def _increment_products(x, y, refinement):
    dx = x[1:] - x[:-1]
    dy = y[1:] - y[:-1]
    s = np.zeros((dx.shape[0], dy.shape[0]))
    for a in range(x.shape[1]):
        s = s + np.multiply.outer(dx[:, a], dy[:, a])
    return s * (1.0 / float(1 << (2 * refinement)))


def pde_kernel(x, y, refinement=0):
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    ip = _increment_products(x, y, refinement)
    nx = ((x.shape[0] - 1) << refinement) + 1
    ny = ((y.shape[0] - 1) << refinement) + 1
    # sweep anti-diagonals s = i + j; diagonal buffers are indexed by i
    prev2 = np.ones(nx)
    prev1 = np.ones(nx)
    for s in range(2, nx + ny - 1):
        cur = np.empty(nx)
        if s <= ny - 1:
            cur[0] = 1.0
        if s <= nx - 1:
            cur[s] = 1.0
        lo = max(1, s - (ny - 1))
        hi = min(s - 1, nx - 1)
        i = np.arange(lo, hi + 1)
        k = ip[(i - 1) >> refinement, (s - i - 1) >> refinement]
        cur[lo:hi + 1] = (prev1[i - 1] + prev1[i]) + (k - 1.0) * prev2[i - 1]
        prev2, prev1 = prev1, cur
    return float(prev1[nx - 1])


def pde_gram(buf_x, off_x, len_x, buf_y, off_y, len_y, refinement, symmetric, out,
             row_lo, row_hi):
    for p in range(row_lo, row_hi):
        x = buf_x[off_x[p]:off_x[p] + len_x[p]]
        for q in range(p if symmetric else 0, len(len_y)):
            v = pde_kernel(x, buf_y[off_y[q]:off_y[q] + len_y[q]], refinement)
            out[p, q] = v
            if symmetric:
                out[q, p] = v


def lasso_cd(X, r, alpha, w, tol=1e-8, max_sweeps=10000, record=False):
    n, p = X.shape
    inv_n = 1.0 / n
    colsq = np.einsum("ij,ij->j", X, X) * inv_n
    history = []
    sweeps = 0
    converged = False
    full = True
    while sweeps < max_sweeps:
        maxchange = 0.0
        cols = range(p) if full else np.flatnonzero(w)
        for j in cols:
            if colsq[j] == 0.0:
                continue
            old = w[j]
            rho = float(X[:, j] @ r) * inv_n + colsq[j] * old
            if rho > alpha:
                new = (rho - alpha) / colsq[j]
            elif rho < -alpha:
                new = (rho + alpha) / colsq[j]
            else:
                new = 0.0
            if new != old:
                delta = new - old
                r -= delta * X[:, j]
                w[j] = new
                maxchange = max(maxchange, abs(delta))
        sweeps += 1
        if record:
            history.append(0.5 * inv_n * float(r @ r) + alpha * float(np.abs(w).sum()))
        if maxchange < tol:
            if full:
                converged = True
                break
            full = True
        else:
            full = False
    return sweeps, converged, history
