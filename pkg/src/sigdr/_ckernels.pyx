# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops.

Every routine here has a twin in :mod:`sigdr._pykernels`. For the signature
and PDE kernels the floating-point operation order is the same in both, so the
backends agree bit for bit (the extension is built with ``-ffp-contract=off``).
"""
import numpy as np

from libc.math cimport fabs
from libc.stdlib cimport free, malloc
from libc.string cimport memcpy


cdef Py_ssize_t _offsets(Py_ssize_t d, int n, Py_ssize_t* offs) noexcept nogil:
    cdef Py_ssize_t size = 1, total = 0
    cdef int k
    for k in range(n + 1):
        offs[k] = total
        total += size
        size *= d
    offs[n + 1] = total
    return total


cdef void _mul_exp(double* S, const double* v, Py_ssize_t d, int n,
                   const Py_ssize_t* offs, double* tmp, double* nxt) noexcept nogil:
    # S <- S (x) exp(v), in place; levels are rewritten top-down (Horner)
    cdef int k, j
    cdef Py_ssize_t a, b, size
    cdef double s, inv
    cdef double* swap
    for k in range(n, 0, -1):
        for b in range(d):
            tmp[b] = S[0] * v[b] / k
        size = d
        for j in range(1, k):
            inv = 1.0 / (k - j)
            for a in range(size):
                s = (S[offs[j] + a] + tmp[a]) * inv
                for b in range(d):
                    nxt[a * d + b] = s * v[b]
            swap = tmp
            tmp = nxt
            nxt = swap
            size *= d
        for a in range(size):
            S[offs[k] + a] += tmp[a]


def sig_stream(const double[:, ::1] inc, int level, bint stream=False):
    """Chen accumulation of ``exp(inc[0]) (x) ... (x) exp(inc[-1])``.

    Returns the final flat tensor, or every prefix (unit first) when
    ``stream`` is set.
    """
    cdef Py_ssize_t L = inc.shape[0], d = inc.shape[1]
    cdef Py_ssize_t t, a, T, block = 1
    cdef int k
    cdef bint zero
    cdef Py_ssize_t* offs = <Py_ssize_t*> malloc((level + 2) * sizeof(Py_ssize_t))
    T = _offsets(d, level, offs)
    for k in range(level):
        block *= d
    if block < 1:
        block = 1
    cdef double* S = <double*> malloc(T * sizeof(double))
    cdef double* tmp = <double*> malloc(block * sizeof(double))
    cdef double* nxt = <double*> malloc(block * sizeof(double))
    if stream:
        out = np.zeros((L + 1, T), dtype=np.float64)
    else:
        out = np.zeros(T, dtype=np.float64)
    cdef double[::1] flat = out.reshape(-1)
    try:
        with nogil:
            S[0] = 1.0
            for a in range(1, T):
                S[a] = 0.0
            if stream:
                flat[0] = 1.0
            for t in range(L):
                zero = True
                for a in range(d):
                    if inc[t, a] != 0.0:
                        zero = False
                        break
                if not zero:
                    _mul_exp(S, &inc[t, 0], d, level, offs, tmp, nxt)
                if stream:
                    memcpy(&flat[(t + 1) * T], S, T * sizeof(double))
            if not stream:
                memcpy(&flat[0], S, T * sizeof(double))
    finally:
        free(offs)
        free(S)
        free(tmp)
        free(nxt)
    return out


cdef double _pde(const double* X, Py_ssize_t lx, const double* Y, Py_ssize_t ly,
                 Py_ssize_t d, int refinement, double* ip, double* prev,
                 double* cur) noexcept nogil:
    cdef Py_ssize_t nx = ((lx - 1) << refinement) + 1
    cdef Py_ssize_t ny = ((ly - 1) << refinement) + 1
    cdef Py_ssize_t i, j, a, jj, ii = -1
    cdef double s, k
    cdef double inv = 1.0 / (<double> (1 << (2 * refinement)))
    cdef double* swap
    for j in range(ny):
        prev[j] = 1.0
    for i in range(nx - 1):
        if (i >> refinement) != ii:
            ii = i >> refinement
            for jj in range(ly - 1):
                s = 0.0
                for a in range(d):
                    s += (X[(ii + 1) * d + a] - X[ii * d + a]) * \
                         (Y[(jj + 1) * d + a] - Y[jj * d + a])
                ip[jj] = s * inv
        cur[0] = 1.0
        for j in range(ny - 1):
            k = ip[j >> refinement]
            cur[j + 1] = (prev[j + 1] + cur[j]) + (k - 1.0) * prev[j]
        swap = prev
        prev = cur
        cur = swap
    return prev[ny - 1]


def pde_kernel(const double[:, ::1] x, const double[:, ::1] y, int refinement=0):
    """Goursat-PDE signature kernel of two point sequences (rows are points)."""
    cdef Py_ssize_t lx = x.shape[0], ly = y.shape[0], d = x.shape[1]
    cdef Py_ssize_t ny = ((ly - 1) << refinement) + 1
    cdef double out
    cdef double* ip = <double*> malloc(ly * sizeof(double))
    cdef double* prev = <double*> malloc(ny * sizeof(double))
    cdef double* cur = <double*> malloc(ny * sizeof(double))
    try:
        with nogil:
            out = _pde(&x[0, 0], lx, &y[0, 0], ly, d, refinement, ip, prev, cur)
    finally:
        free(ip)
        free(prev)
        free(cur)
    return out


def pde_gram(const double[:, ::1] buf_x, const Py_ssize_t[::1] off_x,
             const Py_ssize_t[::1] len_x, const double[:, ::1] buf_y,
             const Py_ssize_t[::1] off_y, const Py_ssize_t[::1] len_y,
             int refinement, bint symmetric, double[:, ::1] out,
             Py_ssize_t row_lo, Py_ssize_t row_hi):
    """Fill ``out[row_lo:row_hi]`` with pairwise kernels of packed series.

    Series ``p`` of a pack occupies rows ``off[p]:off[p]+len[p]`` of its
    buffer. With ``symmetric`` only ``j >= i`` is computed and mirrored.
    """
    cdef Py_ssize_t d = buf_x.shape[1], p, q, q0, maxy = 0
    for q in range(len_y.shape[0]):
        if len_y[q] > maxy:
            maxy = len_y[q]
    cdef Py_ssize_t ny = ((maxy - 1) << refinement) + 1
    cdef double* ip = <double*> malloc(maxy * sizeof(double))
    cdef double* prev = <double*> malloc(ny * sizeof(double))
    cdef double* cur = <double*> malloc(ny * sizeof(double))
    cdef double v
    try:
        with nogil:
            for p in range(row_lo, row_hi):
                q0 = p if symmetric else 0
                for q in range(q0, len_y.shape[0]):
                    v = _pde(&buf_x[off_x[p], 0], len_x[p], &buf_y[off_y[q], 0],
                             len_y[q], d, refinement, ip, prev, cur)
                    out[p, q] = v
                    if symmetric:
                        out[q, p] = v
    finally:
        free(ip)
        free(prev)
        free(cur)


def lasso_cd(const double[::1, :] X, double[::1] r, double alpha, double[::1] w,
             double tol=1e-8, int max_sweeps=10000, bint record=False):
    """Cyclic coordinate descent for ``(1/2n)|r|^2 + alpha |w|_1``.

    ``r`` must hold the residual ``y - X w`` for the incoming ``w``; both are
    updated in place. Full sweeps alternate with sweeps over the non-zero
    coordinates only. Returns ``(sweeps, converged, objective_history)``.
    """
    cdef Py_ssize_t n = X.shape[0], p = X.shape[1], i, j, jj, n_active
    cdef double inv_n = 1.0 / n
    cdef double rho, new, old, delta, maxchange, s, obj
    cdef int sweeps = 0
    cdef bint converged = False, full = True
    cdef double[::1] colsq = np.empty(p)
    cdef Py_ssize_t[::1] active = np.empty(p, dtype=np.intp)
    history = []
    with nogil:
        for j in range(p):
            s = 0.0
            for i in range(n):
                s += X[i, j] * X[i, j]
            colsq[j] = s * inv_n
    while sweeps < max_sweeps:
        with nogil:
            maxchange = 0.0
            n_active = 0
            if full:
                n_active = p
            else:
                for j in range(p):
                    if w[j] != 0.0:
                        active[n_active] = j
                        n_active += 1
            for jj in range(n_active):
                j = jj if full else active[jj]
                if colsq[j] == 0.0:
                    continue
                old = w[j]
                s = 0.0
                for i in range(n):
                    s += X[i, j] * r[i]
                rho = s * inv_n + colsq[j] * old
                if rho > alpha:
                    new = (rho - alpha) / colsq[j]
                elif rho < -alpha:
                    new = (rho + alpha) / colsq[j]
                else:
                    new = 0.0
                if new != old:
                    delta = new - old
                    for i in range(n):
                        r[i] -= delta * X[i, j]
                    w[j] = new
                    if fabs(delta) > maxchange:
                        maxchange = fabs(delta)
        sweeps += 1
        if record:
            obj = 0.0
            for i in range(n):
                obj += r[i] * r[i]
            obj *= 0.5 * inv_n
            s = 0.0
            for j in range(p):
                s += fabs(w[j])
            history.append(obj + alpha * s)
        if maxchange < tol:
            if full:
                converged = True
                break
            full = True
        else:
            full = False
    return sweeps, converged, history
