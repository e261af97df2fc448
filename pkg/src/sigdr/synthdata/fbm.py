"""Fractional Brownian motion on a uniform grid of [0, 1].

Davies-Harte circulant embedding of fractional Gaussian noise, with a
Cholesky fallback when the embedding is not positive semi-definite.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from sigdr.streams import TimeSeries

CHOLESKY_MAX_LENGTH = 2000
EIG_CLIP = -1e-12


def fgn_autocov(hurst: float, n: int) -> np.ndarray:
    """Autocovariance of unit-step fractional Gaussian noise at lags 0..n-1."""
    k = np.arange(n, dtype=np.float64)
    h2 = 2.0 * hurst
    return 0.5 * (np.abs(k + 1) ** h2 - 2 * np.abs(k) ** h2 + np.abs(k - 1) ** h2)


def fbm_cov(hurst: float, times) -> np.ndarray:
    """E[W_s W_t] = (s^{2H} + t^{2H} - |t - s|^{2H}) / 2."""
    t = np.asarray(times, dtype=np.float64)
    h2 = 2.0 * hurst
    s, u = np.meshgrid(t, t, indexing="ij")
    return 0.5 * (s**h2 + u**h2 - np.abs(s - u) ** h2)


@lru_cache(maxsize=32)
def _circulant_sqrt_eigs(hurst: float, n: int):
    r = fgn_autocov(hurst, n + 1)
    c = np.concatenate([r, r[-2:0:-1]])
    lam = np.fft.fft(c).real
    if lam.min() < EIG_CLIP:
        return None
    return np.sqrt(np.clip(lam, 0.0, None) / c.shape[0])


@lru_cache(maxsize=8)
def _cholesky(hurst: float, n: int):
    cov = np.empty((n, n))
    r = fgn_autocov(hurst, n)
    idx = np.abs(np.arange(n)[:, None] - np.arange(n)[None, :])
    cov[:] = r[idx]
    return np.linalg.cholesky(cov)


def fgn(hurst: float, n: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` samples of n unit-step fGn increments, shape ``(size, n)``."""
    if not 0.0 < hurst < 1.0:
        raise ValueError(f"hurst must lie in (0, 1), got {hurst}")
    if n < 1:
        raise ValueError("need at least one increment")
    sq = _circulant_sqrt_eigs(float(hurst), int(n))
    if sq is not None:
        m = sq.shape[0]
        z = rng.standard_normal((size, m)) + 1j * rng.standard_normal((size, m))
        return np.fft.fft(sq * z, axis=1).real[:, :n]
    if n > CHOLESKY_MAX_LENGTH:
        raise ArithmeticError(
            f"circulant embedding not PSD for H={hurst}, n={n}, and n exceeds the "
            f"Cholesky fallback limit {CHOLESKY_MAX_LENGTH}")
    L = _cholesky(float(hurst), int(n))
    return rng.standard_normal((size, n)) @ L.T


def fbm_paths(hurst: float, length: int, size: int, rng: np.random.Generator,
              horizon: float = 1.0) -> np.ndarray:
    """``size`` fBM paths on ``length`` uniform points of [0, horizon]; W_0 = 0."""
    if length < 2:
        raise ValueError("length must be >= 2")
    n = length - 1
    step = horizon / n
    inc = fgn(hurst, n, size, rng) * step**hurst
    out = np.zeros((size, length))
    np.cumsum(inc, axis=1, out=out[:, 1:])
    return out


def gen_fbm(hurst: float, length: int, rng: np.random.Generator) -> TimeSeries:
    """One fBM path as a 1-d series on ``length`` uniform points of [0, 1]."""
    path = fbm_paths(hurst, length, 1, rng)[0]
    return TimeSeries(np.linspace(0.0, 1.0, length), path)
