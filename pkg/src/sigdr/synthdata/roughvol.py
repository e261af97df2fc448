"""Rough volatility: sigma_t = exp(P_t) with P a fractional OU process."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from sigdr.streams import Dataset, EmpiricalMeasure, TimeSeries
from sigdr.synthdata.fbm import fgn


@dataclass(frozen=True)
class RoughVolConfig:
    M: int = 50
    N: int = 20
    length: int = 200
    hurst: float = 0.2
    mean_reversion_range: tuple = (1e-6, 1.0)
    fou_mean: float = 0.0
    fou_vol: float = 0.1
    p0: float = 1.0
    horizon: float = 5.0
    seed: int = 0

    def __post_init__(self):
        if self.M < 1 or self.N < 1:
            raise ValueError("M and N must be >= 1")
        if self.length < 2:
            raise ValueError("length must be >= 2")
        if not 0.0 < self.hurst < 1.0:
            raise ValueError(f"hurst must lie in (0, 1), got {self.hurst}")
        lo, hi = self.mean_reversion_range
        if not 0 <= lo <= hi:
            raise ValueError(f"invalid mean_reversion_range {self.mean_reversion_range}")
        if self.fou_mean < 0 or self.fou_vol < 0 or self.horizon <= 0:
            raise ValueError("fou_mean, fou_vol must be >= 0 and horizon > 0")


def fou_paths(a: float, cfg: RoughVolConfig, size: int, rng: np.random.Generator) -> np.ndarray:
    """Euler-Maruyama fOU paths P, shape ``(size, length)``."""
    n = cfg.length - 1
    h = cfg.horizon / n
    dw = fgn(cfg.hurst, n, size, rng) * h**cfg.hurst if cfg.fou_vol > 0 else np.zeros((size, n))
    P = np.empty((size, cfg.length))
    P[:, 0] = cfg.p0
    for k in range(n):
        P[:, k + 1] = P[:, k] - a * (P[:, k] - cfg.fou_mean) * h + cfg.fou_vol * dw[:, k]
    return P


def gen_rough_vol(cfg: RoughVolConfig) -> Dataset:
    times = np.linspace(0.0, cfg.horizon, cfg.length)
    groups, labels = [], []
    for i in range(cfg.M):
        rng = np.random.default_rng([cfg.seed, i])
        a = rng.uniform(*cfg.mean_reversion_range)
        sigma = np.exp(fou_paths(a, cfg, cfg.N, rng))
        groups.append(EmpiricalMeasure([TimeSeries(times, s) for s in sigma]))
        labels.append(a)
    return Dataset(groups, labels, [f"v{i:04d}" for i in range(cfg.M)])
