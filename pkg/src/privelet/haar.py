"""One-dimensional Haar wavelet transform over power-of-two vectors.

Coefficients are stored level-order with the base first: index 0 holds
the base coefficient (the mean of the vector) and indices [2**(k-1),
2**k) hold the level-k detail coefficients of the decomposition tree
(root at level 1).  That layout doubles as a heap: the ancestor of leaf
j at level k sits at index 2**(k-1) + (j >> (l-k+1)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _check_length(m: int) -> int:
    if m < 1 or (m & (m - 1)) != 0:
        raise ValueError(f"vector length must be a power of two, got {m}")
    return m.bit_length() - 1


def forward_batch(vectors: np.ndarray) -> np.ndarray:
    """Transform along the last axis. O(m) per vector."""
    a = np.asarray(vectors, dtype=np.float64)
    m = a.shape[-1]
    _check_length(m)
    out = np.empty_like(a)
    avg = a
    n = m
    while n > 1:
        left = avg[..., 0::2]
        right = avg[..., 1::2]
        out[..., n // 2 : n] = (left - right) / 2.0
        avg = (left + right) / 2.0
        n //= 2
    out[..., 0] = avg[..., 0]
    return out


def inverse_batch(coefficients: np.ndarray) -> np.ndarray:
    """Invert forward_batch along the last axis."""
    c = np.asarray(coefficients, dtype=np.float64)
    m = c.shape[-1]
    _check_length(m)
    vals = c[..., 0:1].copy()
    n = 1
    while n < m:
        detail = c[..., n : 2 * n]
        up = np.repeat(vals, 2, axis=-1)
        up[..., 0::2] += detail
        up[..., 1::2] -= detail
        vals = up
        n *= 2
    return vals


def weight(depth: int, level: int | None = None) -> float:
    """Weight of the base (level None) or of a level-`level` coefficient
    in a depth-`depth` tree (m = 2**depth entries)."""
    if level is None:
        return float(2 ** depth)
    if not 1 <= level <= depth:
        raise ValueError(f"level {level} out of range for tree depth {depth}")
    return float(2 ** (depth - level + 1))


def weight_vector(m: int) -> np.ndarray:
    """Per-coefficient weights in storage order for an m-entry vector."""
    depth = _check_length(m)
    w = np.empty(m, dtype=np.float64)
    w[0] = float(m)
    for level in range(1, depth + 1):
        w[1 << (level - 1) : 1 << level] = weight(depth, level)
    return w


@dataclass(frozen=True)
class HaarCoefficients:
    """Coefficients of one vector, with their weights."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        _check_length(arr.shape[-1])
        object.__setattr__(self, "values", arr)

    @property
    def base(self) -> float:
        return float(self.values[0])

    @property
    def tree(self) -> np.ndarray:
        return self.values[1:]

    @property
    def depth(self) -> int:
        return self.values.shape[-1].bit_length() - 1

    @property
    def weights(self) -> np.ndarray:
        return weight_vector(self.values.shape[-1])


def forward(vector) -> HaarCoefficients:
    return HaarCoefficients(values=forward_batch(np.asarray(vector, dtype=np.float64)))


def inverse(coefficients: HaarCoefficients | np.ndarray) -> np.ndarray:
    values = coefficients.values if isinstance(coefficients, HaarCoefficients) else coefficients
    return inverse_batch(np.asarray(values, dtype=np.float64))
