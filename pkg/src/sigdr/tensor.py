"""Truncated tensor algebra T^{<=n}(R^d).

Coefficients live in one flat float64 array: level 0 (a scalar) first, then
level 1 (d entries), level 2 (d*d entries, row-major so index (i, j) sits at
``i*d + j``), and so on.
"""
from __future__ import annotations

import math

import numpy as np


def term_count(d: int, n: int) -> int:
    """Number of coefficients of T^{<=n}(R^d): (d^{n+1}-1)/(d-1), or n+1 for d=1."""
    if d < 1 or n < 0:
        raise ValueError(f"need d >= 1 and n >= 0, got d={d}, n={n}")
    if d == 1:
        return n + 1
    return (d ** (n + 1) - 1) // (d - 1)


def level_offsets(d: int, n: int) -> list[int]:
    """Start index of each level in the flat layout, plus the total at the end."""
    offs = [0]
    size = 1
    for _ in range(n + 1):
        offs.append(offs[-1] + size)
        size *= d
    return offs


class TruncatedTensor:
    """Immutable element of T^{<=level}(R^dim)."""

    __slots__ = ("dim", "level", "data")

    def __init__(self, dim: int, level: int, data):
        data = np.array(data, dtype=np.float64).ravel()
        expected = term_count(dim, level)
        if data.shape[0] != expected:
            raise ValueError(
                f"expected {expected} coefficients for dim={dim}, level={level}, "
                f"got {data.shape[0]}")
        data.flags.writeable = False
        self.dim = int(dim)
        self.level = int(level)
        self.data = data

    @classmethod
    def unit(cls, dim: int, level: int) -> "TruncatedTensor":
        data = np.zeros(term_count(dim, level))
        data[0] = 1.0
        return cls(dim, level, data)

    @classmethod
    def zeros(cls, dim: int, level: int) -> "TruncatedTensor":
        return cls(dim, level, np.zeros(term_count(dim, level)))

    def block(self, k: int) -> np.ndarray:
        """Level-k coefficients as a read-only ``(dim,)*k`` array."""
        if not 0 <= k <= self.level:
            raise IndexError(f"level {k} outside 0..{self.level}")
        offs = level_offsets(self.dim, self.level)
        return self.data[offs[k]:offs[k + 1]].reshape((self.dim,) * k)

    def coefficient(self, *word: int) -> float:
        """Coefficient of the word ``(i_1, ..., i_k)`` (0-based letters)."""
        return float(self.block(len(word))[tuple(word)] if word else self.data[0])

    def __add__(self, other: "TruncatedTensor") -> "TruncatedTensor":
        _check_compatible(self, other)
        return TruncatedTensor(self.dim, self.level, self.data + other.data)

    def __sub__(self, other: "TruncatedTensor") -> "TruncatedTensor":
        _check_compatible(self, other)
        return TruncatedTensor(self.dim, self.level, self.data - other.data)

    def __mul__(self, scalar: float) -> "TruncatedTensor":
        return TruncatedTensor(self.dim, self.level, self.data * float(scalar))

    __rmul__ = __mul__

    def __matmul__(self, other: "TruncatedTensor") -> "TruncatedTensor":
        return tensor_mul(self, other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TruncatedTensor):
            return NotImplemented
        return (self.dim == other.dim and self.level == other.level
                and np.array_equal(self.data, other.data))

    def __hash__(self):
        return hash((self.dim, self.level, self.data.tobytes()))

    def __repr__(self) -> str:
        return f"TruncatedTensor(dim={self.dim}, level={self.level}, data={self.data!r})"


def _check_compatible(a: TruncatedTensor, b: TruncatedTensor) -> None:
    if a.dim != b.dim or a.level != b.level:
        raise ValueError(
            f"incompatible tensors: (dim={a.dim}, level={a.level}) vs "
            f"(dim={b.dim}, level={b.level})")


def tensor_mul(a: TruncatedTensor, b: TruncatedTensor) -> TruncatedTensor:
    """Truncated tensor product: C_k = sum_{i+j=k} A_i (x) B_j for k <= level."""
    _check_compatible(a, b)
    offs = level_offsets(a.dim, a.level)
    out = np.zeros_like(a.data)
    for k in range(a.level + 1):
        acc = out[offs[k]:offs[k + 1]]
        for i in range(k + 1):
            j = k - i
            acc += np.outer(a.data[offs[i]:offs[i + 1]], b.data[offs[j]:offs[j + 1]]).ravel()
    return TruncatedTensor(a.dim, a.level, out)


def tensor_exp(v, level: int) -> TruncatedTensor:
    """(1, v, v^{(x)2}/2!, ..., v^{(x)n}/n!) for a d-vector ``v``."""
    v = np.atleast_1d(np.asarray(v, dtype=np.float64))
    if v.ndim != 1:
        raise ValueError(f"expected a vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("tensor_exp requires finite entries")
    if level < 0:
        raise ValueError(f"level must be >= 0, got {level}")
    blocks = [np.ones(1)]
    for k in range(1, level + 1):
        blocks.append(np.outer(blocks[-1], v).ravel() / k)
    return TruncatedTensor(v.shape[0], level, np.concatenate(blocks))


def inner(a: TruncatedTensor, b: TruncatedTensor) -> float:
    """Sum over levels of the Euclidean dot product of the coefficient blocks."""
    _check_compatible(a, b)
    return float(np.dot(a.data, b.data))


def factorial_scales(d: int, n: int) -> np.ndarray:
    """Per-coefficient k! for the flat layout (used to undo factorial decay)."""
    offs = level_offsets(d, n)
    out = np.empty(offs[-1])
    for k in range(n + 1):
        out[offs[k]:offs[k + 1]] = math.factorial(k)
    return out
