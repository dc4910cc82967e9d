"""Datasets, frequency matrices, and the synthetic benchmark generator."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .schema import (
    Schema,
    ValidationError,
    nominal_attribute,
    ordinal_attribute,
)


@dataclass
class Dataset:
    """Rows are stored as integer indices into each attribute's domain."""

    schema: Schema
    rows: np.ndarray  # shape (n, d), int64
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.int64).reshape(-1, len(self.schema))

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    def validate(self) -> None:
        for j, attr in enumerate(self.schema):
            col = self.rows[:, j]
            bad = np.nonzero((col < 0) | (col >= attr.domain_size))[0]
            if bad.size:
                i = int(bad[0])
                raise ValidationError(
                    f"row {i}, attribute {attr.name!r}: index {int(col[i])} outside "
                    f"domain of size {attr.domain_size}"
                )


@dataclass(frozen=True)
class FrequencyMatrix:
    """Dense d-dimensional array of counts (or noisy reals) over the
    storage domain.  Ordinal dimensions include zero padding entries
    after the real values; nominal dimensions are indexed by hierarchy
    leaf order."""

    schema: Schema
    entries: np.ndarray
    tuple_count: int

    def __post_init__(self):
        arr = np.ascontiguousarray(self.entries, dtype=np.float64).reshape(self.schema.dims)
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.schema.dims

    @property
    def size(self) -> int:
        return self.entries.size


def build_frequency_matrix(dataset: Dataset) -> FrequencyMatrix:
    """Tally rows into the dense matrix. O(n + m).

    Domain index i of an attribute maps directly to storage index i:
    ordinal padding sits after the real values, and nominal domains are
    declared in leaf order.
    """
    dataset.validate()
    dims = dataset.schema.dims
    m = int(np.prod(dims, dtype=np.int64))
    if dataset.n == 0:
        counts = np.zeros(m, dtype=np.float64)
    else:
        flat = np.ravel_multi_index(tuple(dataset.rows.T), dims)
        counts = np.bincount(flat, minlength=m).astype(np.float64)
    return FrequencyMatrix(schema=dataset.schema, entries=counts, tuple_count=dataset.n)


def _balanced_split(total: int) -> tuple[int, int]:
    """Factor `total` into two near-equal integers (used for 3-level
    hierarchies whose level-2 count should be sqrt of the leaf count)."""
    a = max(2, round(math.sqrt(total)))
    while total % a != 0:
        a -= 1
    if a < 2:  # prime leaf count: no equal split; caller rejects it
        return total, 1
    return a, total // a

def three_level_hierarchy(prefix: str, leaf_count: int, group_count: int | None = None) -> dict:
    """Root, `group_count` level-2 nodes, leaves split evenly among them."""
    if group_count is None:
        group_count, _ = _balanced_split(leaf_count)
    if group_count <= 1 or leaf_count % group_count != 0:
        raise ValidationError(
            f"cannot split {leaf_count} leaves into {group_count} equal groups"
        )
    per = leaf_count // group_count
    if per < 2:
        raise ValidationError("each level-2 node needs at least 2 leaves")
    groups = []
    for g in range(group_count):
        leaves = [{"label": f"{prefix}{g * per + i}"} for i in range(per)]
        groups.append({"label": f"{prefix}g{g}", "children": leaves})
    return {"label": "root", "children": groups}


def synthetic_schema(m: int) -> Schema:
    """Two ordinal and two nominal attributes of domain size m**(1/4);
    each nominal hierarchy has three levels with ~sqrt(|A|) level-2 nodes."""
    k = round(m ** 0.25)
    if k < 4 or k ** 4 != m:
        raise ValidationError(f"matrix size {m} is not a fourth power >= 256")
    groups, _ = _balanced_split(k)
    attrs = (
        ordinal_attribute("ord1", range(k)),
        ordinal_attribute("ord2", range(k)),
        nominal_attribute("nom1", three_level_hierarchy("a", k, groups)),
        nominal_attribute("nom2", three_level_hierarchy("b", k, groups)),
    )
    return Schema(attributes=attrs)


def generate_synthetic(n: int, m: int, seed: int) -> Dataset:
    """Uniform random rows over the synthetic 4-attribute schema of total
    domain size m.  Bit-reproducible for a fixed seed."""
    if n < 0:
        raise ValidationError("tuple count must be non-negative")
    schema = synthetic_schema(m)
    k = schema.attributes[0].domain_size
    rng = np.random.default_rng(seed)
    rows = rng.integers(0, k, size=(n, 4), dtype=np.int64)
    meta = {"generator": "uniform", "seed": int(seed), "m": int(m)}
    groups = len(schema.attributes[2].hierarchy.children_of(0))
    if groups * groups != k:
        meta["note"] = f"sqrt({k}) not integral; level-2 node count {groups} (nearest balanced split)"
    return Dataset(schema=schema, rows=rows, metadata=meta)


def write_dataset_csv(dataset: Dataset, path, delimiter: str = ",") -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        writer.writerow(dataset.schema.names)
        value_tables = [attr.values for attr in dataset.schema]
        for row in dataset.rows:
            writer.writerow([value_tables[j][row[j]] for j in range(len(value_tables))])


def read_dataset_csv(path, schema: Schema, delimiter: str = ",") -> Dataset:
    """Parse a delimiter-separated file with a header row of attribute names."""
    lookup = []
    for attr in schema:
        lookup.append({str(v): i for i, v in enumerate(attr.values)})
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file, expected a header row")
        header = [h.strip() for h in header]
        if set(header) != set(schema.names):
            raise ValidationError(
                f"{path}: header {header} does not match schema attributes {list(schema.names)}"
            )
        order = [header.index(name) for name in schema.names]
        rows = []
        for i, rec in enumerate(reader):
            if len(rec) != len(header):
                raise ValidationError(f"row {i}: expected {len(header)} fields, got {len(rec)}")
            try:
                rows.append([lookup[j][rec[col].strip()] for j, col in enumerate(order)])
            except KeyError:
                for j, col in enumerate(order):
                    if rec[col].strip() not in lookup[j]:
                        raise ValidationError(
                            f"row {i}, attribute {schema.names[j]!r}: "
                            f"value {rec[col].strip()!r} not in domain"
                        ) from None
    arr = np.array(rows, dtype=np.int64).reshape(-1, len(schema))
    return Dataset(schema=schema, rows=arr)
