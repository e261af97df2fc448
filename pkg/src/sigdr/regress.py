"""Kernel ridge regression, Lasso, metrics, the DR-RBF baseline and grid-search CV."""
from __future__ import annotations

import itertools
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.spatial.distance import pdist, squareform

from sigdr._backend import kernels
from sigdr.errors import NumericalError
from sigdr.sigkernel import GramMatrix, _block_means, _mmd_from_means
from sigdr.streams import EmpiricalMeasure, TimeSeries

log = logging.getLogger(__name__)

JITTER_START = 1e-10
JITTER_MAX = 1e-4
LASSO_TOL = 1e-8
LASSO_MAX_SWEEPS = 10_000


# ---------------------------------------------------------------- KRR

@dataclass
class FittedKRR:
    dual_weights: np.ndarray
    alpha: float
    offset: float = 0.0
    jitter: float = 0.0
    train_ids: list | None = None

    def predict(self, k_star) -> np.ndarray:
        return krr_predict(self, k_star)


def _entries(G):
    return G.entries if isinstance(G, GramMatrix) else np.asarray(G, dtype=np.float64)


def krr_fit(G, y, alpha: float, center: bool = False, train_ids=None) -> FittedKRR:
    """Dual weights w = (G + alpha I)^{-1} (y - offset) by Cholesky.

    With ``center`` the training mean is removed from y and re-added by
    :func:`krr_predict`. On factorization failure a diagonal jitter of
    1e-10 * trace(G)/M is added and grown tenfold up to 1e-4 * trace(G)/M.
    """
    if isinstance(G, GramMatrix) and G.kind != "kernel":
        raise ValueError("krr_fit needs a kernel Gram matrix, got kind " + G.kind)
    K = _entries(G)
    y = np.asarray(y, dtype=np.float64).ravel()
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError(f"Gram matrix must be square, got {K.shape}")
    if K.shape[0] != y.shape[0]:
        raise ValueError(f"Gram size {K.shape[0]} does not match {y.shape[0]} labels")
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if not np.all(np.isfinite(K)):
        raise NumericalError("Gram matrix has non-finite entries")
    M = K.shape[0]
    offset = float(np.mean(y)) if center else 0.0
    target = y - offset
    A = K + alpha * np.eye(M)
    scale = max(float(np.trace(K)) / M, np.finfo(float).tiny)
    jitter = 0.0
    while True:
        try:
            factor = cho_factor(A + jitter * np.eye(M) if jitter else A, lower=True)
            break
        except LinAlgError:
            jitter = JITTER_START * scale if jitter == 0.0 else jitter * 10.0
            if jitter > JITTER_MAX * scale * (1 + 1e-9):
                raise NumericalError(
                    f"Cholesky of G + alpha I failed up to jitter {JITTER_MAX:g} * trace/M") from None
            log.warning("Cholesky failed, retrying with jitter %.3g", jitter)
    w = cho_solve(factor, target)
    return FittedKRR(w, float(alpha), offset, jitter, list(train_ids) if train_ids else None)


def krr_predict(model: FittedKRR, k_star) -> np.ndarray | float:
    """dot(k_star, w) + offset; ``k_star`` is a vector or a (queries, M_train) matrix."""
    k = np.asarray(k_star, dtype=np.float64)
    if k.shape[-1] != model.dual_weights.shape[0]:
        raise ValueError(
            f"k_star has {k.shape[-1]} entries, model has {model.dual_weights.shape[0]}")
    out = k @ model.dual_weights + model.offset
    return float(out) if k.ndim == 1 else out


# ---------------------------------------------------------------- Lasso

@dataclass
class FittedLasso:
    weights: np.ndarray
    intercept: float
    alpha: float
    converged: bool = True
    sweeps: int = 0
    history: list = field(default_factory=list)
    x_mean: np.ndarray | None = None

    def predict(self, X) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.weights + self.intercept


def lasso_fit(X, y, alpha: float, warm_start=None, tol: float = LASSO_TOL,
              max_sweeps: int = LASSO_MAX_SWEEPS, record: bool = False,
              warn: bool = True) -> FittedLasso:
    """Minimize (1/2n)|y - b - Xw|^2 + alpha |w|_1 by cyclic coordinate descent.

    The intercept b is unpenalized and handled by centering X and y.
    Non-convergence is reported in ``converged`` and warned about, not raised.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError(f"X has shape {X.shape} but there are {y.shape[0]} labels")
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise NumericalError("non-finite values in lasso input")
    x_mean = X.mean(axis=0)
    y_mean = float(y.mean())
    Xc = np.asfortranarray(X - x_mean)
    w = np.zeros(X.shape[1]) if warm_start is None else np.array(warm_start, dtype=np.float64)
    if w.shape != (X.shape[1],):
        raise ValueError("warm_start has the wrong length")
    r = np.ascontiguousarray(y - y_mean - Xc @ w)
    sweeps, converged, history = kernels.lasso_cd(Xc, r, float(alpha), w, float(tol),
                                                  int(max_sweeps), bool(record))
    if not converged and warn:
        warnings.warn(f"lasso did not converge in {sweeps} sweeps (alpha={alpha:g})",
                      RuntimeWarning, stacklevel=2)
    if not converged and not warn:
        log.info("lasso did not converge in %d sweeps (alpha=%g)", sweeps, alpha)
    intercept = y_mean - float(x_mean @ w)
    return FittedLasso(w, intercept, float(alpha), bool(converged), int(sweeps),
                       list(history), x_mean)


def lasso_kkt_violation(model: FittedLasso, X, y) -> float:
    """Largest violation of the Lasso subgradient optimality conditions."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    n = X.shape[0]
    Xc = X - X.mean(axis=0)
    r = (y - y.mean()) - Xc @ model.weights
    grad = Xc.T @ r / n
    w, a = model.weights, model.alpha
    nz = w != 0
    viol = np.zeros_like(w)
    viol[nz] = np.abs(grad[nz] - a * np.sign(w[nz]))
    viol[~nz] = np.maximum(np.abs(grad[~nz]) - a, 0.0)
    return float(viol.max()) if viol.size else 0.0


def lasso_objective(model: FittedLasso, X, y) -> float:
    X = np.asarray(X, dtype=np.float64)
    r = np.asarray(y, dtype=np.float64) - model.predict(X)
    return 0.5 * float(r @ r) / X.shape[0] + model.alpha * float(np.abs(model.weights).sum())


# ---------------------------------------------------------------- metrics

def metrics(y_true, y_pred, mape: bool = True) -> dict:
    y_true = np.asarray(y_true, dtype=np.float64).ravel()
    y_pred = np.asarray(y_pred, dtype=np.float64).ravel()
    if y_true.shape != y_pred.shape:
        raise ValueError(f"length mismatch: {y_true.shape[0]} vs {y_pred.shape[0]}")
    if y_true.size == 0:
        raise ValueError("empty label vectors")
    resid = y_pred - y_true
    out = {"mse": float(np.mean(resid**2))}
    if mape:
        if np.any(y_true == 0):
            raise ValueError("MAPE is undefined when a true value is zero")
        out["mape"] = float(100.0 * np.mean(np.abs(resid) / np.abs(y_true)))
    return out


# ---------------------------------------------------------------- DR-RBF baseline

def pad_values(ts, length: int) -> np.ndarray:
    """Values padded by repeating the last point (or truncated) to ``length`` rows."""
    v = ts.values if isinstance(ts, TimeSeries) else np.asarray(ts, dtype=np.float64)
    if v.ndim == 1:
        v = v[:, None]
    if v.shape[0] >= length:
        return v[:length]
    return np.concatenate([v, np.repeat(v[-1:], length - v.shape[0], axis=0)], axis=0)


def stack_series(series, length: int) -> np.ndarray:
    """One row per series: padded values stacked dimension by dimension."""
    return np.stack([pad_values(s, length).T.ravel() for s in series])


def rbf_group_distances(sq_dist: np.ndarray, sizes, l1: float) -> np.ndarray:
    """Squared mean-embedding distances of groups under k1 = exp(-|x-y|^2 / (2 l1^2))."""
    K1 = np.exp(-sq_dist / (2.0 * l1 * l1))
    sizes = [int(s) for s in sizes]
    E = _block_means(K1, sizes, sizes)
    M = len(sizes)
    D = np.zeros((M, M))
    for i in range(M):
        for j in range(i + 1, M):
            D[i, j] = D[j, i] = _mmd_from_means(E[i, i], E[j, j], E[i, j], (i, j))
    return D


def baseline_rbf_gram(groups, l1: float, l2: float, length: int | None = None) -> GramMatrix:
    """DR-RBF Gram matrix exp(-|rho_i - rho_j|^2 / (2 l2^2)) of mean embeddings."""
    groups = [g if isinstance(g, EmpiricalMeasure) else EmpiricalMeasure(g) for g in groups]
    if l1 <= 0 or l2 <= 0:
        raise ValueError("lengthscales must be positive")
    series = [s for g in groups for s in g]
    length = length or max(len(s) for s in series)
    Z = stack_series(series, length)
    D = rbf_group_distances(squareform(pdist(Z, "sqeuclidean")), [len(g) for g in groups], l1)
    return GramMatrix(np.exp(-D / (2.0 * l2 * l2)), "kernel", 1.0 / (math.sqrt(2.0) * l2))


# ---------------------------------------------------------------- grid search

# tie-break order: larger alpha, larger l2, larger l1, smaller n, smaller m
_TIE_KEYS = (("alpha", -1), ("l2", -1), ("l1", -1), ("n", 1), ("m", 1))


def tie_key(params: dict):
    return tuple(sign * params[k] for k, sign in _TIE_KEYS if k in params)


def expand_grid(grid: dict) -> list[dict]:
    """Cartesian product of a dict of value lists, in key-sorted, value order."""
    if not grid:
        raise ValueError("empty grid")
    keys = sorted(grid)
    values = [list(grid[k]) if isinstance(grid[k], (list, tuple)) else [grid[k]] for k in keys]
    if any(len(v) == 0 for v in values):
        raise ValueError("grid has a parameter with no values")
    return [dict(zip(keys, combo)) for combo in itertools.product(*values)]


def kfold_indices(n: int, folds: int, seed) -> list[tuple[np.ndarray, np.ndarray]]:
    """Seeded k-fold split of ``range(n)`` into (train, validation) index pairs."""
    if folds < 2:
        raise ValueError(f"need at least 2 folds, got {folds}")
    if n < folds:
        raise ValueError(f"{n} samples cannot be split into {folds} folds")
    perm = np.random.default_rng(seed).permutation(n)
    parts = np.array_split(perm, folds)
    out = []
    for k in range(folds):
        val = np.sort(parts[k])
        tr = np.sort(np.concatenate([parts[j] for j in range(folds) if j != k]))
        out.append((tr, val))
    return out


@dataclass
class SearchResult:
    params: dict
    score: float
    scores: list            # (params, score or None) for every grid point
    failures: int = 0


_FAILURES = (NumericalError, LinAlgError, FloatingPointError, np.linalg.LinAlgError)


def cv_search(rep, y, train_idx, grid: dict, folds: int = 5, seed=0,
              threads: int | None = None) -> SearchResult:
    """Exhaustive k-fold CV over ``grid`` using a method representation ``rep``.

    ``rep.evaluate(params_list, fit_idx, val_idx, y)`` returns predictions on
    ``val_idx`` for each parameter dict (grouped so that penalty paths can be
    warm-started). Indices refer to the full dataset.
    """
    from sigdr.parallel import pmap

    points = expand_grid(grid)
    train_idx = np.asarray(train_idx)
    y = np.asarray(y, dtype=np.float64)
    splits = [(train_idx[a], train_idx[b]) for a, b in
              kfold_indices(len(train_idx), folds, seed)]
    batches = rep.batches(points)

    def run(batch):
        try:
            errs = np.zeros(len(batch))
            for fit_idx, val_idx in splits:
                preds = rep.evaluate(batch, fit_idx, val_idx, y)
                for b, p in enumerate(preds):
                    errs[b] += float(np.mean((p - y[val_idx]) ** 2))
            errs /= len(splits)
            bad = ~np.isfinite(errs)
            return [None if bad[b] else float(errs[b]) for b in range(len(batch))]
        except _FAILURES as exc:
            log.warning("grid batch %s failed: %s", batch[0], exc)
            return [None] * len(batch)

    results = pmap(run, batches, threads)
    scored = [(p, s) for batch, res in zip(batches, results) for p, s in zip(batch, res)]
    ok = [(p, s) for p, s in scored if s is not None]
    if not ok:
        raise NumericalError("every grid point failed")
    best_p, best_s = min(ok, key=lambda ps: (ps[1], tie_key(ps[0])))
    return SearchResult(dict(best_p), best_s, scored, len(scored) - len(ok))


def grid_search_cv(dataset, method: str, grid: dict | None = None, folds: int = 5,
                   seed=0, settings=None, threads: int | None = None) -> SearchResult:
    """Grid-search CV of ``method`` (ses, kes or dr-rbf) on a whole dataset."""
    from sigdr.pipeline import MethodSettings, build_representation, default_grid

    settings = settings or MethodSettings()
    idx = np.arange(len(dataset))
    rep = build_representation(method, dataset, idx, settings, threads=threads)
    grid = grid or default_grid(method)
    return cv_search(rep, dataset.labels, idx, grid, folds, seed, threads)
