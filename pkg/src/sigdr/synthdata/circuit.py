"""Phase of a circuit from (voltage, current) recordings of defective devices."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from sigdr.streams import Dataset, EmpiricalMeasure, TimeSeries, subsample


@dataclass(frozen=True)
class CircuitConfig:
    M: int = 50
    N: int = 15
    periods: int = 20
    pts_per_period: int = 25
    omega: float = 2 * math.pi
    phase_range: tuple = (math.pi / 8, math.pi / 2)
    drop_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.M < 1 or self.N < 1:
            raise ValueError("M and N must be >= 1")
        lo, hi = self.phase_range
        if not 0 < lo <= hi < math.pi:
            raise ValueError(f"phase_range must lie within (0, pi), got {self.phase_range}")
        if self.periods < 1 or self.pts_per_period < 2 or self.omega <= 0:
            raise ValueError("periods, pts_per_period and omega must be positive")
        if not 0 <= self.drop_rate < 1:
            raise ValueError(f"drop_rate must lie in [0, 1), got {self.drop_rate}")


def circuit_series(phase: float, cfg: CircuitConfig) -> TimeSeries:
    """Noise-free (v, i) = (sin wt, sin(wt - phase)) on the regular grid."""
    n = cfg.periods * cfg.pts_per_period
    period = 2 * math.pi / cfg.omega
    t = np.arange(n) * (period / cfg.pts_per_period)
    return TimeSeries(t, np.column_stack([np.sin(cfg.omega * t),
                                          np.sin(cfg.omega * t - phase)]))


def gen_circuit(cfg: CircuitConfig) -> Dataset:
    groups, labels = [], []
    for i in range(cfg.M):
        rng = np.random.default_rng([cfg.seed, i])
        phase = rng.uniform(*cfg.phase_range)
        full = circuit_series(phase, cfg)
        series = [subsample(full, cfg.drop_rate, rng) if cfg.drop_rate > 0 else full
                  for _ in range(cfg.N)]
        groups.append(EmpiricalMeasure(series))
        labels.append(phase)
    return Dataset(groups, labels, [f"c{i:04d}" for i in range(cfg.M)])
