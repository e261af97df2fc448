"""Truncated signatures of piecewise-linear paths via Chen's relation."""
from __future__ import annotations

import numpy as np

from sigdr._backend import kernels
from sigdr.streams import TimeSeries
from sigdr.tensor import TruncatedTensor


def _values(ts) -> np.ndarray:
    if isinstance(ts, TimeSeries):
        return ts.values
    arr = np.asarray(ts, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    return arr


def signature_array(values, level: int) -> np.ndarray:
    """Flat signature coefficients of the path through the rows of ``values``.

    Timestamps never enter: only successive increments are used, left to
    right, so the result is invariant under reparametrization.
    """
    x = _values(values)
    if x.shape[0] < 2:
        raise ValueError("signature needs at least 2 points")
    if level < 0:
        raise ValueError(f"level must be >= 0, got {level}")
    return kernels.sig_stream(np.ascontiguousarray(np.diff(x, axis=0)), level, False)


def signature_stream_array(values, level: int) -> np.ndarray:
    """Signatures of every prefix, shape ``(length, term_count)``; row 0 is the unit."""
    x = _values(values)
    if x.shape[0] < 2:
        raise ValueError("signature needs at least 2 points")
    if level < 0:
        raise ValueError(f"level must be >= 0, got {level}")
    return kernels.sig_stream(np.ascontiguousarray(np.diff(x, axis=0)), level, True)


def signature(ts, n: int) -> TruncatedTensor:
    """S^{<=n} of a series: exp(D_2) (x) ... (x) exp(D_l) with D_k the increments."""
    x = _values(ts)
    return TruncatedTensor(x.shape[1], n, signature_array(x, n))


def pathwise_signature(ts, n: int) -> list:
    """Signature of each prefix x|[t_1, t_k], k = 1..l (the first is the unit)."""
    x = _values(ts)
    stream = signature_stream_array(x, n)
    return [TruncatedTensor(x.shape[1], n, row) for row in stream]
