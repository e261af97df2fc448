"""Hard-sphere ideal gas in a cubic box; label is the initial temperature."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from sigdr.streams import Dataset, EmpiricalMeasure, TimeSeries

PRESETS = {"few": 0.35, "many": 0.65}
MAX_PLACEMENT_ATTEMPTS = 10_000


@dataclass(frozen=True)
class GasConfig:
    M: int = 50
    N: int = 20
    box_side: float = 3.0
    radius_factor: float = 0.35
    temp_range: tuple = (1.0, 1000.0)
    steps: int = 400
    dt: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.M < 1 or self.N < 1:
            raise ValueError("M and N must be >= 1")
        if self.box_side <= 0 or self.radius_factor <= 0:
            raise ValueError("box_side and radius_factor must be positive")
        lo, hi = self.temp_range
        if not 0 <= lo <= hi:
            raise ValueError(f"invalid temp_range {self.temp_range}")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.dt is not None and self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        r = self.radius
        # centres live in a cube of side box_side - 2r; require room for a
        # simple cubic packing of N spheres there
        inner = self.box_side - 2 * r
        per_axis = math.floor(inner / (2 * r)) + 1 if inner >= 0 else 0
        if per_axis**3 < self.N:
            raise ValueError(
                f"radius {r:.4g} too large for {self.N} spheres in a box of side {self.box_side}")

    @property
    def volume(self) -> float:
        return self.box_side**3

    @property
    def radius(self) -> float:
        # the factor scales the per-particle length (V/N)^{1/3}, read as a diameter
        return 0.5 * self.radius_factor * (self.volume / self.N) ** (1.0 / 3.0)

    @property
    def step(self) -> float:
        if self.dt is not None:
            return self.dt
        return self.radius / (4.0 * math.sqrt(max(self.temp_range[1], 1e-12)))


@dataclass
class GasRun:
    positions: np.ndarray        # (steps + 1, N, 3)
    velocities: np.ndarray       # final velocities (N, 3)
    collisions: int
    wall_hits: int
    energy: tuple                # (initial, final) kinetic energy


def _place(n, r, side, rng):
    pos = np.empty((n, 3))
    for p in range(n):
        for _ in range(MAX_PLACEMENT_ATTEMPTS):
            c = rng.uniform(r, side - r, size=3)
            if p == 0 or np.min(np.sum((pos[:p] - c) ** 2, axis=1)) >= (2 * r) ** 2:
                pos[p] = c
                break
        else:
            raise RuntimeError(
                f"could not place particle {p} after {MAX_PLACEMENT_ATTEMPTS} attempts")
    return pos


def _collide(pos, vel, r):
    """Elastic equal-mass exchange for overlapping, approaching pairs."""
    n = pos.shape[0]
    count = 0
    diff = pos[:, None, :] - pos[None, :, :]
    dist2 = np.einsum("ijk,ijk->ij", diff, diff)
    ii, jj = np.nonzero(np.triu(dist2 < (2 * r) ** 2, k=1))
    for i, j in zip(ii.tolist(), jj.tolist()):
        d = pos[i] - pos[j]
        dd = float(d @ d)
        if dd == 0.0:
            continue
        rel = vel[i] - vel[j]
        approach = float(rel @ d)
        if approach >= 0.0:
            continue
        impulse = (approach / dd) * d
        vel[i] -= impulse
        vel[j] += impulse
        count += 1
    return count


def _walls(pos, vel, r, side):
    hits = 0
    lo, hi = r, side - r
    below = pos < lo
    above = pos > hi
    if below.any():
        pos[below] = 2 * lo - pos[below]
        vel[below] = np.abs(vel[below])
        hits += int(below.sum())
    if above.any():
        pos[above] = 2 * hi - pos[above]
        vel[above] = -np.abs(vel[above])
        hits += int(above.sum())
    np.clip(pos, lo, hi, out=pos)
    return hits


def simulate(cfg: GasConfig, speed: float, rng: np.random.Generator) -> GasRun:
    """Run one box: every particle starts at ``speed`` in a uniform direction."""
    n, r, side = cfg.N, cfg.radius, cfg.box_side
    pos = _place(n, r, side, rng)
    direction = rng.standard_normal((n, 3))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    vel = speed * direction
    e0 = 0.5 * float(np.sum(vel * vel))
    dt = cfg.step
    out = np.empty((cfg.steps + 1, n, 3))
    out[0] = pos
    collisions = hits = 0
    for t in range(cfg.steps):
        vmax = float(np.max(np.linalg.norm(vel, axis=1))) if n else 0.0
        sub = max(1, math.ceil(vmax * dt / (r / 4.0)))
        h = dt / sub
        for _ in range(sub):
            pos += h * vel
            hits += _walls(pos, vel, r, side)
            collisions += _collide(pos, vel, r)
        out[t + 1] = pos
    e1 = 0.5 * float(np.sum(vel * vel))
    return GasRun(out, vel, collisions, hits, (e0, e1))


def gen_ideal_gas(cfg: GasConfig, return_runs: bool = False):
    groups, labels, runs = [], [], []
    times = np.arange(cfg.steps + 1) * cfg.step
    for i in range(cfg.M):
        rng = np.random.default_rng([cfg.seed, i])
        temp = rng.uniform(*cfg.temp_range)
        run = simulate(cfg, math.sqrt(temp), rng)
        groups.append(EmpiricalMeasure(
            [TimeSeries(times, run.positions[:, p, :]) for p in range(cfg.N)]))
        labels.append(temp)
        runs.append(run)
    ds = Dataset(groups, labels, [f"g{i:04d}" for i in range(cfg.M)])
    return (ds, runs) if return_runs else ds
