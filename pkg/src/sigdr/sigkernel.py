"""Signature kernel by the Goursat PDE, expected-signature MMD and the KES Gram matrix."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from sigdr._backend import kernels
from sigdr.errors import NumericalError
from sigdr.parallel import get_threads, pmap
from sigdr.streams import EmpiricalMeasure, TimeSeries

# entries above -MMD_TOL * max(1, E_ii + E_jj) are rounding noise and clipped to 0
MMD_TOL = 1e-6


def _points(ts) -> np.ndarray:
    arr = ts.values if isinstance(ts, TimeSeries) else np.asarray(ts, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    return np.ascontiguousarray(arr, dtype=np.float64)


def pde_solve(x, y, refinement: int = 0) -> float:
    """Corner value of the finite-difference Goursat scheme for <S(x), S(y)>.

    Each data interval is split into 2**refinement steps. Only increments are
    used, so timestamps do not matter.
    """
    x, y = _points(x), _points(y)
    if x.shape[1] != y.shape[1]:
        raise ValueError(f"dimension mismatch: {x.shape[1]} vs {y.shape[1]}")
    if x.shape[0] < 2 or y.shape[0] < 2:
        raise ValueError("pde_solve needs series of length >= 2")
    if refinement < 0:
        raise ValueError(f"refinement must be >= 0, got {refinement}")
    return float(kernels.pde_kernel(x, y, int(refinement)))


def _pack(series):
    pts = [_points(s) for s in series]
    lengths = np.array([p.shape[0] for p in pts], dtype=np.intp)
    offsets = np.zeros(len(pts), dtype=np.intp)
    offsets[1:] = np.cumsum(lengths)[:-1]
    return np.ascontiguousarray(np.concatenate(pts, axis=0)), offsets, lengths


def _row_chunks(n_rows, n_chunks, symmetric):
    if n_chunks <= 1 or n_rows <= 1:
        return [(0, n_rows)]
    # equal work per chunk; row p of a symmetric gram costs n_rows - p solves
    work = (n_rows - np.arange(n_rows)) if symmetric else np.ones(n_rows)
    cum = np.cumsum(work)
    cuts = np.searchsorted(cum, cum[-1] * np.arange(1, n_chunks) / n_chunks, side="right")
    bounds = np.unique(np.concatenate([[0], cuts, [n_rows]]))
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def series_gram(xs, ys=None, refinement: int = 0, threads: int | None = None) -> np.ndarray:
    """Matrix of ``pde_solve(xs[p], ys[q])``; symmetric fast path when ``ys`` is None."""
    xs = list(xs)
    symmetric = ys is None
    ys = xs if symmetric else list(ys)
    if not xs or not ys:
        return np.zeros((len(xs), len(ys)))
    dims = {_points(s).shape[1] for s in xs + ys}
    if len(dims) != 1:
        raise ValueError(f"series must share one dimension, got {sorted(dims)}")
    bx, ox, lx = _pack(xs)
    by, oy, ly = (bx, ox, lx) if symmetric else _pack(ys)
    if lx.min() < 2 or ly.min() < 2:
        raise ValueError("pde_solve needs series of length >= 2")
    out = np.zeros((len(xs), len(ys)))
    n = threads or get_threads()
    chunks = _row_chunks(len(xs), 4 * n if n > 1 else 1, symmetric)

    def run(bounds):
        kernels.pde_gram(bx, ox, lx, by, oy, ly, int(refinement), symmetric, out, *bounds)

    pmap(run, chunks, n)
    return out


def _block_means(K, sizes_a, sizes_b):
    """Exactly-rounded block means (order independent, hence symmetric)."""
    ca = np.concatenate([[0], np.cumsum(sizes_a)])
    cb = np.concatenate([[0], np.cumsum(sizes_b)])
    E = np.empty((len(sizes_a), len(sizes_b)))
    for i in range(len(sizes_a)):
        for j in range(len(sizes_b)):
            blk = K[ca[i]:ca[i + 1], cb[j]:cb[j + 1]]
            E[i, j] = math.fsum(blk.ravel().tolist()) / blk.size
    return E


def _mmd_from_means(e_aa, e_bb, e_ab, pair):
    v = e_aa + e_bb - 2.0 * e_ab
    if v < 0.0:
        if v < -MMD_TOL * max(1.0, abs(e_aa) + abs(e_bb)):
            raise NumericalError(f"negative squared MMD {v:.3e} for groups {pair}")
        v = 0.0
    return v


def mmd_sq(a, b, refinement: int = 0) -> float:
    """||ES(a) - ES(b)||^2 = E_aa + E_bb - 2 E_ab from pairwise PDE kernels."""
    a = a if isinstance(a, EmpiricalMeasure) else EmpiricalMeasure(a)
    b = b if isinstance(b, EmpiricalMeasure) else EmpiricalMeasure(b)
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    e_aa = _block_means(series_gram(a, refinement=refinement), [len(a)], [len(a)])[0, 0]
    if b is a:
        return _mmd_from_means(e_aa, e_aa, e_aa, (0, 0))
    e_bb = _block_means(series_gram(b, refinement=refinement), [len(b)], [len(b)])[0, 0]
    e_ab = _block_means(series_gram(a, b, refinement=refinement), [len(a)], [len(b)])[0, 0]
    return _mmd_from_means(e_aa, e_bb, e_ab, (0, 1))


def mmd_matrix_from_series_gram(K: np.ndarray, sizes) -> np.ndarray:
    """Squared MMD between all groups from the kernel matrix of all their series.

    Rows/columns of ``K`` list the series group by group, ``sizes[i]`` per group.
    """
    sizes = [int(s) for s in sizes]
    E = _block_means(K, sizes, sizes)
    M = len(sizes)
    out = np.zeros((M, M))
    for i in range(M):
        for j in range(i + 1, M):
            out[i, j] = out[j, i] = _mmd_from_means(E[i, i], E[j, j], E[i, j], (i, j))
    return out


def mmd_matrix(groups, refinement: int = 0, threads: int | None = None) -> np.ndarray:
    """Pairwise squared MMD of groups; every PDE solve is done once.

    The within-group blocks K_ii are shared by all pairs involving group i.
    """
    groups = [g if isinstance(g, EmpiricalMeasure) else EmpiricalMeasure(g) for g in groups]
    if not groups:
        raise ValueError("no groups")
    series = [s for g in groups for s in g]
    K = series_gram(series, refinement=refinement, threads=threads)
    return mmd_matrix_from_series_gram(K, [len(g) for g in groups])


def mmd_cross_matrix(groups_a, groups_b, refinement: int = 0,
                     threads: int | None = None) -> np.ndarray:
    """Squared MMD between each group of ``groups_a`` and each of ``groups_b``."""
    sa = [s for g in groups_a for s in g]
    sb = [s for g in groups_b for s in g]
    na, nb = [len(g) for g in groups_a], [len(g) for g in groups_b]
    e_aa = np.diag(_block_means(series_gram(sa, refinement=refinement, threads=threads), na, na))
    e_bb = np.diag(_block_means(series_gram(sb, refinement=refinement, threads=threads), nb, nb))
    e_ab = _block_means(series_gram(sa, sb, refinement=refinement, threads=threads), na, nb)
    out = np.empty((len(na), len(nb)))
    for i in range(len(na)):
        for j in range(len(nb)):
            out[i, j] = _mmd_from_means(e_aa[i], e_bb[j], e_ab[i, j], (i, j))
    return out


def sigma_from_lengthscale(lengthscale: float) -> float:
    """sigma with sigma^2 = 1 / (2 l^2)."""
    return 1.0 / (math.sqrt(2.0) * lengthscale)


@dataclass
class GramMatrix:
    entries: np.ndarray
    kind: str
    sigma: float | None = None
    refinement: int | None = None
    group_ids: list | None = field(default=None)

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=np.float64)
        if self.kind not in ("kernel", "mmd_sq"):
            raise ValueError(f"unknown Gram kind {self.kind!r}")
        if self.entries.ndim != 2 or self.entries.shape[0] != self.entries.shape[1]:
            raise ValueError(f"Gram matrix must be square, got {self.entries.shape}")

    def __len__(self):
        return self.entries.shape[0]

    def to_kernel(self, sigma: float) -> "GramMatrix":
        if self.kind != "mmd_sq":
            raise ValueError("only an mmd_sq matrix can be turned into a kernel")
        return GramMatrix(np.exp(-sigma**2 * self.entries), "kernel", sigma,
                          self.refinement, self.group_ids)

    def check(self, tol: float = 1e-12) -> None:
        """Raise if the matrix violates the invariants of its kind."""
        G = self.entries
        if not np.allclose(G, G.T, rtol=0, atol=tol):
            raise NumericalError("Gram matrix is not symmetric")
        if self.kind == "kernel":
            if not np.allclose(np.diag(G), 1.0, rtol=0, atol=tol):
                raise NumericalError("kernel Gram diagonal differs from 1")
            # exp(-large) may underflow to 0, so 0 is allowed
            if np.any(G < 0) or np.any(G > 1 + tol):
                raise NumericalError("kernel Gram entries outside [0, 1]")
        else:
            if np.any(np.diag(G) != 0) or np.any(G < -1e-8):
                raise NumericalError("mmd_sq matrix has a non-zero diagonal or negative entries")


def kes_gram(groups, sigma: float, refinement: int = 0, threads: int | None = None) -> GramMatrix:
    """KES Gram matrix exp(-sigma^2 * MMD^2(group_i, group_j))."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    D = GramMatrix(mmd_matrix(groups, refinement, threads), "mmd_sq", None, refinement)
    return D.to_kernel(sigma)


def write_gram_csv(path, gram: GramMatrix) -> None:
    ids = "|".join(gram.group_ids) if gram.group_ids else ""
    sigma = "" if gram.sigma is None else repr(float(gram.sigma))
    refinement = "" if gram.refinement is None else str(gram.refinement)
    with Path(path).open("w") as fh:
        fh.write(f"# kind={gram.kind},sigma={sigma},refinement={refinement},groups={ids}\n")
        for row in gram.entries:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_gram_csv(path) -> GramMatrix:
    with Path(path).open() as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise ValueError(f"{path}: missing '# kind=...' header line")
        meta = dict(item.split("=", 1) for item in header[1:].strip().split(","))
        rows = [[float(v) for v in line.split(",")] for line in fh if line.strip()]
    return GramMatrix(
        np.asarray(rows, dtype=np.float64),
        meta.get("kind", "kernel"),
        float(meta["sigma"]) if meta.get("sigma") else None,
        int(meta["refinement"]) if meta.get("refinement") else None,
        meta["groups"].split("|") if meta.get("groups") else None,
    )
