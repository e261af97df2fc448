"""Time-series containers and the path transforms applied before signatures."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from sigdr.errors import DataError


class TimeSeries:
    """Timestamped samples of a d-dimensional path, read as piecewise linear.

    ``times`` must be strictly increasing, ``values`` has one row per time.
    """

    __slots__ = ("times", "values")

    def __init__(self, times, values):
        times = np.array(times, dtype=np.float64).ravel()
        values = np.array(values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise ValueError(f"values must be 2-d, got shape {values.shape}")
        if values.shape[0] != times.shape[0]:
            raise ValueError(
                f"{times.shape[0]} timestamps but {values.shape[0]} value rows")
        if times.shape[0] < 2:
            raise ValueError("a time series needs at least 2 samples")
        if values.shape[1] < 1:
            raise ValueError("a time series needs at least one channel")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(values))):
            raise ValueError("time series entries must be finite")
        if np.any(np.diff(times) <= 0):
            raise ValueError("timestamps must be strictly increasing")
        times.flags.writeable = False
        values.flags.writeable = False
        self.times = times
        self.values = values

    @classmethod
    def regular(cls, values, t0: float = 0.0, t1: float | None = None) -> "TimeSeries":
        """Series on a uniform grid; defaults to times 0, 1, ..., l-1."""
        values = np.asarray(values, dtype=np.float64)
        n = values.shape[0]
        times = np.arange(n, dtype=np.float64) if t1 is None else np.linspace(t0, t1, n)
        return cls(times, values)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def __len__(self) -> int:
        return self.times.shape[0]

    def increments(self) -> np.ndarray:
        return np.diff(self.values, axis=0)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return (np.array_equal(self.times, other.times)
                and np.array_equal(self.values, other.values))

    def __repr__(self) -> str:
        return f"TimeSeries(length={len(self)}, dim={self.dim})"


class EmpiricalMeasure:
    """Uniform empirical measure over a non-empty group of series of equal dimension."""

    __slots__ = ("series",)

    def __init__(self, series: Sequence[TimeSeries]):
        series = tuple(series)
        if not series:
            raise ValueError("an empirical measure needs at least one series")
        dims = {s.dim for s in series}
        if len(dims) != 1:
            raise ValueError(f"series in a group must share one dimension, got {sorted(dims)}")
        self.series = series

    @property
    def dim(self) -> int:
        return self.series[0].dim

    def __len__(self) -> int:
        return len(self.series)

    def __iter__(self):
        return iter(self.series)

    def __getitem__(self, i):
        return self.series[i]

    def __repr__(self) -> str:
        return f"EmpiricalMeasure(size={len(self)}, dim={self.dim})"


@dataclass
class Dataset:
    groups: list
    labels: np.ndarray
    group_ids: list = field(default=None)

    def __post_init__(self):
        self.groups = list(self.groups)
        self.labels = np.asarray(self.labels, dtype=np.float64).ravel()
        if len(self.groups) != self.labels.shape[0]:
            raise ValueError(f"{len(self.groups)} groups but {self.labels.shape[0]} labels")
        if not np.all(np.isfinite(self.labels)):
            raise ValueError("labels must be finite")
        if self.group_ids is None:
            self.group_ids = [str(i) for i in range(len(self.groups))]
        self.group_ids = [str(g) for g in self.group_ids]
        if len(self.group_ids) != len(self.groups):
            raise ValueError("group_ids must match groups")
        if len(set(self.group_ids)) != len(self.group_ids):
            raise ValueError("group ids must be unique")

    def __len__(self) -> int:
        return len(self.groups)

    @property
    def dim(self) -> int:
        return self.groups[0].dim

    def subset(self, idx) -> "Dataset":
        idx = list(np.asarray(idx, dtype=int))
        return Dataset([self.groups[i] for i in idx], self.labels[idx],
                       [self.group_ids[i] for i in idx])


def normalized_times(ts: TimeSeries) -> np.ndarray:
    t = ts.times
    return (t - t[0]) / (t[-1] - t[0])


def time_augment(ts: TimeSeries) -> TimeSeries:
    """Prepend the time channel (t - t_1)/(t_l - t_1) as coordinate 0."""
    return TimeSeries(ts.times, np.column_stack([normalized_times(ts), ts.values]))


def _lead_lag_index(length: int):
    p = np.arange(2 * length - 1)
    return (p + 1) // 2, p // 2


def lead_lag(ts: TimeSeries) -> TimeSeries:
    """Lead-lag transform; output channels are (lead_1, lag_1, lead_2, lag_2, ...).

    Output length is 2l-1 on the synthetic grid 1, ..., 2l-1.
    """
    lead, lag = _lead_lag_index(len(ts))
    x = ts.values
    out = np.empty((lead.shape[0], 2 * ts.dim))
    out[:, 0::2] = x[lead]
    out[:, 1::2] = x[lag]
    return TimeSeries(np.arange(1, lead.shape[0] + 1, dtype=np.float64), out)


def lead_lag_time_augment(ts: TimeSeries) -> TimeSeries:
    """Lead-lag the values and prepend a time channel that moves with the lead.

    The time channel is the normalized original time, repeated like a lead
    component, so it stays non-decreasing and keeps irregular spacing.
    """
    lead, _ = _lead_lag_index(len(ts))
    ll = lead_lag(ts)
    return TimeSeries(ll.times, np.column_stack([normalized_times(ts)[lead], ll.values]))


def subsample(ts: TimeSeries, drop_rate: float, rng: np.random.Generator) -> TimeSeries:
    """Drop each interior point independently with probability ``drop_rate``.

    Endpoints are always kept and surviving timestamps are unchanged.
    """
    if not 0.0 <= drop_rate < 1.0:
        raise ValueError(f"drop_rate must lie in [0, 1), got {drop_rate}")
    n = len(ts)
    if n * (1.0 - drop_rate) < 2:
        raise ValueError(
            f"length {n} at drop_rate {drop_rate} leaves fewer than 2 expected points")
    keep = np.ones(n, dtype=bool)
    keep[1:-1] = rng.random(n - 2) >= drop_rate
    return TimeSeries(ts.times[keep], ts.values[keep])


def union_grid(group: EmpiricalMeasure) -> np.ndarray:
    return np.unique(np.concatenate([s.times for s in group]))


def align(group: EmpiricalMeasure) -> EmpiricalMeasure:
    """Resample every member onto the union of the group's timestamps.

    Linear interpolation keeps each member's knots (so its signature prefixes
    at those knots are unchanged); outside a member's own time range it is held
    constant, which adds only zero increments.
    """
    grid = union_grid(group)
    if all(len(s) == grid.shape[0] for s in group):
        return group
    out = []
    for s in group:
        vals = np.column_stack([np.interp(grid, s.times, s.values[:, a]) for a in range(s.dim)])
        out.append(TimeSeries(grid, vals))
    return EmpiricalMeasure(out)


@dataclass(frozen=True)
class ChannelStats:
    """Per-channel mean and standard deviation for z-scoring."""

    mean: tuple
    std: tuple

    @classmethod
    def fit(cls, groups) -> "ChannelStats":
        """Statistics over every sample of every series in ``groups``."""
        stacked = np.concatenate([s.values for g in groups for s in g], axis=0)
        mean = stacked.mean(axis=0)
        std = stacked.std(axis=0)
        std = np.where(std > 0, std, 1.0)
        return cls(tuple(float(m) for m in mean), tuple(float(s) for s in std))

    @classmethod
    def identity(cls, dim: int) -> "ChannelStats":
        return cls((0.0,) * dim, (1.0,) * dim)

    def apply(self, ts: TimeSeries) -> TimeSeries:
        if ts.dim != len(self.mean):
            raise ValueError(f"stats fitted for {len(self.mean)} channels, series has {ts.dim}")
        return TimeSeries(ts.times, (ts.values - np.asarray(self.mean)) / np.asarray(self.std))

    def to_dict(self) -> dict:
        return {"mean": list(self.mean), "std": list(self.std)}

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelStats":
        return cls(tuple(d["mean"]), tuple(d["std"]))


def load_dataset(path, labels_path=None) -> Dataset:
    """Read the long-format dataset CSV (and optionally the labels CSV).

    Dataset header: ``group_id,series_id,time,dim_0,...,dim_{d-1}``; rows in
    any order. Labels header: ``group_id,label``. Without a labels file the
    labels are all zero.
    """
    path = Path(path)
    rows: dict = {}
    order: list = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if header[:3] != ["group_id", "series_id", "time"] or len(header) < 4:
            raise DataError(f"{path}: header must start with group_id,series_id,time,dim_0")
        dim = len(header) - 3
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != dim + 3:
                raise DataError(f"{path}:{lineno}: expected {dim + 3} fields, got {len(rec)}")
            gid, sid = rec[0].strip(), rec[1].strip()
            try:
                nums = [float(c) for c in rec[2:]]
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            if gid not in rows:
                rows[gid] = {}
                order.append(gid)
            rows[gid].setdefault(sid, []).append(nums)
    if not order:
        raise DataError(f"{path}: no data rows")
    groups = []
    for gid in order:
        series = []
        for sid, recs in rows[gid].items():
            arr = np.asarray(recs)
            arr = arr[np.argsort(arr[:, 0], kind="stable")]
            if np.any(np.diff(arr[:, 0]) == 0):
                raise DataError(f"{path}: duplicate timestamp in group {gid!r}, series {sid!r}")
            try:
                series.append(TimeSeries(arr[:, 0], arr[:, 1:]))
            except ValueError as exc:
                raise DataError(f"{path}: group {gid!r}, series {sid!r}: {exc}") from None
        groups.append(EmpiricalMeasure(series))
    labels = np.zeros(len(order))
    if labels_path is not None:
        table = load_labels(labels_path)
        missing = [g for g in order if g not in table]
        if missing:
            raise DataError(f"{labels_path}: no label for groups {missing[:5]}")
        labels = np.array([table[g] for g in order])
    return Dataset(groups, labels, order)


def load_labels(path) -> dict:
    out = {}
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header != ["group_id", "label"]:
            raise DataError(f"{path}: header must be group_id,label")
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            try:
                out[rec[0].strip()] = float(rec[1])
            except (IndexError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
    return out


def save_dataset(ds: Dataset, path, labels_path=None) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["group_id", "series_id", "time"] + [f"dim_{a}" for a in range(ds.dim)])
        for gid, g in zip(ds.group_ids, ds.groups):
            for sid, s in enumerate(g):
                for t, row in zip(s.times, s.values):
                    w.writerow([gid, sid, repr(float(t))] + [repr(float(v)) for v in row])
    if labels_path is not None:
        with Path(labels_path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["group_id", "label"])
            for gid, y in zip(ds.group_ids, ds.labels):
                w.writerow([gid, repr(float(y))])
