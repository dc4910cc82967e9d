"""Multi-dimensional wavelet transform by standard decomposition.

Each dimension is processed in schema declaration order: ordinal
dimensions through the Haar transform, nominal ones through the
hierarchy transform.  Per-coefficient weights are materialized and
propagated step by step: a produced coefficient's weight is the
one-dimensional weight at its position times the (shared) weight of its
source vector.  Dimensions listed in `split` are left untransformed,
which realizes the sub-matrix splitting of the hybrid mechanism: a
sub-matrix at fixed split coordinates is exactly the corresponding
slice of the output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import haar, nominal
from .data import FrequencyMatrix
from .schema import NOMINAL, ORDINAL, AttributeSchema, Schema


def _axis_weight_vector(attr: AttributeSchema) -> np.ndarray:
    if attr.kind == ORDINAL:
        return haar.weight_vector(attr.storage_size)
    return nominal.weight_vector(attr.hierarchy)


def coefficient_dims(schema: Schema, split: tuple[str, ...] = ()) -> tuple[int, ...]:
    """Output dims: a transformed nominal axis grows from its leaf count
    to its hierarchy node count; other axes keep their storage size."""
    dims = []
    for attr in schema:
        if attr.kind == NOMINAL and attr.name not in split:
            dims.append(attr.hierarchy.num_nodes)
        else:
            dims.append(attr.storage_size)
    return tuple(dims)


@dataclass(frozen=True)
class CoefficientMatrix:
    """Fully processed coefficient array with aligned weights."""

    schema: Schema
    values: np.ndarray
    weights: np.ndarray
    split: tuple[str, ...] = ()
    tuple_count: int = 0

    def __post_init__(self):
        expect = coefficient_dims(self.schema, self.split)
        if tuple(self.values.shape) != expect or tuple(self.weights.shape) != expect:
            raise ValueError(f"coefficient arrays must have dims {expect}")

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(self.values.shape)

    def weight_at(self, coordinates) -> float:
        coords = tuple(int(c) for c in coordinates)
        for c, s in zip(coords, self.dims):
            if not 0 <= c < s:
                raise ValueError(f"coordinates {coords} out of range for dims {self.dims}")
        return float(self.weights[coords])


def transform_axis(
    values: np.ndarray, weights: np.ndarray, attr: AttributeSchema, axis: int
) -> tuple[np.ndarray, np.ndarray]:
    """One forward step along `axis`; returns (values, weights).

    All entries of a source vector share one weight (the axis has not
    been processed yet), so the propagated weight is that shared weight
    times the per-position one-dimensional weight.
    """
    # contiguous per-axis passes keep the level sweeps cache-friendly
    v = np.ascontiguousarray(np.moveaxis(values, axis, -1))
    shared = np.moveaxis(weights, axis, -1)[..., 0]
    if attr.kind == ORDINAL:
        out = haar.forward_batch(v)
    else:
        out = nominal.forward_batch(v, attr.hierarchy)
    new_w = shared[..., None] * _axis_weight_vector(attr)
    return np.moveaxis(out, -1, axis), np.moveaxis(new_w, -1, axis)


def invert_axis(values: np.ndarray, attr: AttributeSchema, axis: int) -> np.ndarray:
    """One inverse step along `axis`; nominal axes get mean subtraction
    before reconstruction."""
    v = np.ascontiguousarray(np.moveaxis(values, axis, -1))
    if attr.kind == ORDINAL:
        out = haar.inverse_batch(v)
    else:
        out = nominal.inverse_batch(nominal.mean_subtract_batch(v, attr.hierarchy), attr.hierarchy)
    return np.moveaxis(out, -1, axis)


def forward(matrix: FrequencyMatrix, split: tuple[str, ...] = ()) -> CoefficientMatrix:
    """Transform every non-split dimension in declaration order. O(n + m)."""
    schema = matrix.schema
    for name in split:
        schema.attribute(name)
    values = np.asarray(matrix.entries, dtype=np.float64)
    weights = np.ones_like(values)
    for axis, attr in enumerate(schema):
        if attr.name in split:
            continue
        values, weights = transform_axis(values, weights, attr, axis)
    weights = np.ascontiguousarray(weights)
    return CoefficientMatrix(
        schema=schema,
        values=values,
        weights=weights,
        split=tuple(split),
        tuple_count=matrix.tuple_count,
    )


def inverse(coefficients: CoefficientMatrix) -> FrequencyMatrix:
    """Invert the transformed dimensions in reverse declaration order."""
    schema = coefficients.schema
    values = np.asarray(coefficients.values, dtype=np.float64)
    for axis in range(len(schema) - 1, -1, -1):
        attr = schema.attributes[axis]
        if attr.name in coefficients.split:
            continue
        values = invert_axis(values, attr, axis)
    return FrequencyMatrix(
        schema=schema, entries=values, tuple_count=coefficients.tuple_count
    )
