"""Expected signatures, the pathwise expected signature (PES) and SES features."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from sigdr.parallel import pmap
from sigdr.signature import signature_array, signature_stream_array
from sigdr.streams import EmpiricalMeasure, TimeSeries, align
from sigdr.tensor import TruncatedTensor, factorial_scales, term_count

DEFAULT_FEATURE_CAP = 10**6


def pairwise_mean(stack: np.ndarray) -> np.ndarray:
    """Mean over axis 0 by recursive pairwise summation in the given order."""

    def total(a):
        if a.shape[0] == 1:
            return a[0]
        half = a.shape[0] // 2
        return total(a[:half]) + total(a[half:])

    if stack.shape[0] == 0:
        raise ValueError("mean of an empty stack")
    return total(stack) / stack.shape[0]


def _as_group(group) -> EmpiricalMeasure:
    if isinstance(group, EmpiricalMeasure):
        return group
    if isinstance(group, TimeSeries):
        return EmpiricalMeasure([group])
    series = list(group)
    if not series:
        raise ValueError("empty group")
    return EmpiricalMeasure(series)


def expected_signature(group, n: int) -> TruncatedTensor:
    """Mean of the level-n signatures of the members of ``group``."""
    group = _as_group(group)
    sigs = np.stack([signature_array(s.values, n) for s in group])
    return TruncatedTensor(group.dim, n, pairwise_mean(sigs))


@dataclass(frozen=True)
class TensorSeries:
    """The PES sampled on the group's time grid: one flat tensor per step."""

    array: np.ndarray
    times: np.ndarray
    dim: int
    level: int

    @property
    def steps(self) -> list:
        return [TruncatedTensor(self.dim, self.level, row) for row in self.array]

    def __len__(self) -> int:
        return self.array.shape[0]

    def __getitem__(self, k) -> TruncatedTensor:
        return TruncatedTensor(self.dim, self.level, self.array[k])


def pathwise_expected_signature(group, n: int, resample: bool = True) -> TensorSeries:
    """Step k is the mean over members of their prefix signatures up to t_k.

    Members on different time grids are first resampled onto the union grid
    (see :func:`sigdr.streams.align`); with ``resample=False`` that raises
    instead.
    """
    group = _as_group(group)
    if resample:
        group = align(group)
    else:
        ref = group[0].times
        for i, s in enumerate(group):
            if len(s) != ref.shape[0] or not np.array_equal(s.times, ref):
                raise ValueError(f"series {i} is not on the time grid of series 0")
    streams = np.stack([signature_stream_array(s.values, n) for s in group])
    return TensorSeries(pairwise_mean(streams), group[0].times, group.dim, n)


@dataclass(frozen=True)
class FeatureVector:
    coefficients: np.ndarray
    inner_level: int
    outer_level: int
    dim: int

    def __len__(self) -> int:
        return self.coefficients.shape[0]


def ses_feature_count(d: int, n: int, m: int, time_augment: bool = False) -> int:
    c = term_count(d, n) - 1 + (1 if time_augment else 0)
    return term_count(c, m)


def ses_features(group, n: int, m: int, *, rescale: bool = False,
                 time_augment: bool = False, cap: int = DEFAULT_FEATURE_CAP) -> FeatureVector:
    """Signature (level m) of the PES (level n) of a group.

    The constant level-0 PES channel is dropped, leaving c = term_count(d, n) - 1
    channels. ``rescale`` multiplies level-k channels by k!; ``time_augment``
    adds the group's normalized time as an extra outer channel.
    """
    group = _as_group(group)
    d = group.dim
    size = ses_feature_count(d, n, m, time_augment)
    if size > cap:
        raise ValueError(f"SES feature vector would have {size} entries (cap {cap})")
    pes = pathwise_expected_signature(group, n)
    path = pes.array[:, 1:]
    if rescale:
        path = path * factorial_scales(d, n)[1:]
    if time_augment:
        t = pes.times
        path = np.column_stack([(t - t[0]) / (t[-1] - t[0]), path])
    coeffs = signature_array(np.ascontiguousarray(path), m)
    return FeatureVector(coeffs, n, m, d)


def ses_feature_matrix(groups, n: int, m: int, threads: int | None = None, **kw) -> np.ndarray:
    """Stack ``ses_features`` over groups, one row per group."""
    rows = pmap(lambda g: ses_features(g, n, m, **kw).coefficients, groups, threads)
    return np.vstack(rows)


def write_feature_csv(path, group_ids, matrix) -> None:
    matrix = np.asarray(matrix)
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["group_id"] + [f"f_{j}" for j in range(matrix.shape[1])])
        for gid, row in zip(group_ids, matrix):
            w.writerow([gid] + [repr(float(v)) for v in row])


def read_feature_csv(path):
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "group_id":
            raise ValueError(f"{path}: header must start with group_id")
        ids, rows = [], []
        for rec in reader:
            if rec:
                ids.append(rec[0])
                rows.append([float(v) for v in rec[1:]])
    return ids, np.asarray(rows, dtype=np.float64).reshape(len(ids), len(header) - 1)
