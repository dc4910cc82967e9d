"""Wavelet-style transform for nominal attributes with a hierarchy.

The decomposition tree is the hierarchy with one extra child attached
under every hierarchy leaf holding the matrix entry, so there is one
coefficient per hierarchy node.  The base coefficient (root) is the
total leaf-sum; every other coefficient is its node's leaf-sum minus
the average leaf-sum of its parent's children.  The transform is
over-complete: coefficient count minus entry count equals the number of
internal hierarchy nodes.

Coefficients are stored in level-order of the tree (base first), i.e.
indexed by hierarchy node id.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .schema import Hierarchy

GROUP_SUM_RTOL = 1e-9


def _leaf_sums(values: np.ndarray, h: Hierarchy) -> np.ndarray:
    """Per-node subtree sums, computed bottom-up level by level."""
    sums = np.zeros(values.shape[:-1] + (h.num_nodes,), dtype=np.float64)
    sums[..., h.leaf_ids] = values
    for level in range(h.height, 1, -1):
        lo, hi = h.level_bounds[level - 1]
        parents = h.parents[lo:hi]
        # children of one parent are contiguous in node-id order, and each
        # parent appears once among the segment starts
        starts = np.nonzero(np.diff(parents, prepend=parents[0] - 1))[0]
        sums[..., parents[starts]] += np.add.reduceat(sums[..., lo:hi], starts, axis=-1)
    return sums


def forward_batch(values: np.ndarray, h: Hierarchy) -> np.ndarray:
    """Transform along the last axis (size = leaf count, in leaf order);
    output size is the hierarchy node count."""
    a = np.asarray(values, dtype=np.float64)
    if a.shape[-1] != h.leaf_count:
        raise ValueError(f"expected vectors of length {h.leaf_count}, got {a.shape[-1]}")
    sums = _leaf_sums(a, h)
    coef = np.empty_like(sums)
    coef[..., 0] = sums[..., 0]
    parents = h.parents[1:]
    coef[..., 1:] = sums[..., 1:] - sums[..., parents] / h.fanout[parents]
    return coef


def mean_subtract_batch(coefficients: np.ndarray, h: Hierarchy) -> np.ndarray:
    """Remove each sibling group's mean so groups sum to zero.  Uses only
    the coefficient values, never the source data; idempotent."""
    c = np.asarray(coefficients, dtype=np.float64)
    out = c.copy()
    if h.num_nodes > 1:
        sums = np.add.reduceat(c[..., 1:], h.group_starts, axis=-1)
        means = sums / h.group_sizes
        out[..., 1:] -= np.repeat(means, h.group_sizes, axis=-1)
    return out


def group_sum_residual(coefficients: np.ndarray, h: Hierarchy) -> float:
    """Largest |group sum| scaled by 1 + the group's magnitude."""
    c = np.asarray(coefficients, dtype=np.float64)
    if h.num_nodes <= 1:
        return 0.0
    sums = np.add.reduceat(c[..., 1:], h.group_starts, axis=-1)
    peaks = np.maximum.reduceat(np.abs(c[..., 1:]), h.group_starts, axis=-1)
    return float(np.max(np.abs(sums) / (1.0 + peaks)))


def inverse_batch(coefficients: np.ndarray, h: Hierarchy, check: bool = True) -> np.ndarray:
    """Reconstruct entries from coefficients whose sibling groups sum to
    zero (run mean_subtract_batch first on noisy inputs)."""
    c = np.asarray(coefficients, dtype=np.float64)
    if c.shape[-1] != h.num_nodes:
        raise ValueError(f"expected {h.num_nodes} coefficients, got {c.shape[-1]}")
    if check:
        residual = group_sum_residual(c, h)
        if residual > GROUP_SUM_RTOL:
            raise ValueError(
                f"sibling groups do not sum to zero (residual {residual:.3e}); "
                "apply mean subtraction before reconstruction"
            )
    # noisy leaf-sum of a node = its coefficient + parent's leaf-sum / parent fanout
    sums = np.empty_like(c)
    sums[..., 0] = c[..., 0]
    for level in range(2, h.height + 1):
        lo, hi = h.level_bounds[level - 1]
        parents = h.parents[lo:hi]
        sums[..., lo:hi] = c[..., lo:hi] + sums[..., parents] / h.fanout[parents]
    return sums[..., h.leaf_ids]


def weight(h: Hierarchy, node_id: int) -> float:
    """Base coefficient -> 1; otherwise f/(2f-2) for parent fanout f."""
    if node_id == 0:
        return 1.0
    f = int(h.fanout[h.parents[node_id]])
    if f < 2:
        raise ValueError(f"node {node_id}: parent fanout {f} < 2")
    return f / (2.0 * f - 2.0)


def weight_vector(h: Hierarchy) -> np.ndarray:
    w = np.empty(h.num_nodes, dtype=np.float64)
    w[0] = 1.0
    if h.num_nodes > 1:
        f = h.fanout[h.parents[1:]].astype(np.float64)
        if np.any(f < 2):
            raise ValueError("hierarchy contains a fanout-1 internal node")
        w[1:] = f / (2.0 * f - 2.0)
    return w


@dataclass(frozen=True)
class NominalCoefficients:
    values: np.ndarray
    hierarchy: Hierarchy

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if self.values.shape[-1] != self.hierarchy.num_nodes:
            raise ValueError("coefficient count must equal the hierarchy node count")

    @property
    def base(self) -> float:
        return float(self.values[0])

    @property
    def weights(self) -> np.ndarray:
        return weight_vector(self.hierarchy)

    def sibling_groups(self) -> list[np.ndarray]:
        h = self.hierarchy
        rest = self.values[..., 1:]
        return [
            rest[..., s : s + z]
            for s, z in zip(h.group_starts, h.group_sizes)
        ]


def forward(vector, h: Hierarchy) -> NominalCoefficients:
    return NominalCoefficients(values=forward_batch(np.asarray(vector), h), hierarchy=h)


def mean_subtract(c: NominalCoefficients) -> NominalCoefficients:
    return NominalCoefficients(values=mean_subtract_batch(c.values, c.hierarchy), hierarchy=c.hierarchy)


def inverse(c: NominalCoefficients) -> np.ndarray:
    return inverse_batch(c.values, c.hierarchy)
