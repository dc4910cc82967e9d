"""Range-count queries over frequency matrices, and the error metrics
used by the benchmark harness.

A query holds one predicate per constrained attribute: a closed index
interval for ordinal attributes, or one hierarchy node (leaf or internal,
meaning its whole subtree) for nominal ones.  Unconstrained attributes
cover their full real domain; ordinal padding entries are never covered.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import FrequencyMatrix
from .schema import NOMINAL, ORDINAL, Schema, ValidationError


@dataclass(frozen=True)
class Interval:
    """Closed 0-based index interval over an ordinal domain."""

    lo: int
    hi: int


@dataclass(frozen=True)
class Subtree:
    """All leaves under one hierarchy node (the node may be a leaf)."""

    node: int


@dataclass(frozen=True)
class RangeQuery:
    predicates: dict[str, Interval | Subtree] = field(default_factory=dict)

    def validate(self, schema: Schema) -> None:
        for name, pred in self.predicates.items():
            attr = schema.attribute(name)
            if isinstance(pred, Interval):
                if attr.kind != ORDINAL:
                    raise ValidationError(f"{name!r}: interval predicate on a non-ordinal attribute")
                if not (0 <= pred.lo <= pred.hi < attr.domain_size):
                    raise ValidationError(
                        f"{name!r}: interval [{pred.lo}, {pred.hi}] outside domain "
                        f"[0, {attr.domain_size - 1}]"
                    )
            elif isinstance(pred, Subtree):
                if attr.kind != NOMINAL:
                    raise ValidationError(f"{name!r}: node predicate on a non-nominal attribute")
                if not (0 <= pred.node < attr.hierarchy.num_nodes):
                    raise ValidationError(f"{name!r}: node id {pred.node} out of range")
            else:
                raise ValidationError(f"{name!r}: unknown predicate {pred!r}")


def storage_spans(query: RangeQuery, schema: Schema) -> list[tuple[int, int]]:
    """Per-axis covered storage range [lo, hi] inclusive."""
    spans = []
    for attr in schema:
        pred = query.predicates.get(attr.name)
        if pred is None:
            spans.append((0, attr.domain_size - 1))  # padding excluded
        elif isinstance(pred, Interval):
            spans.append((pred.lo, pred.hi))
        else:
            lo, hi = attr.hierarchy.leaf_span[pred.node]
            spans.append((int(lo), int(hi) - 1))
    return spans


def evaluate(query: RangeQuery, matrix: FrequencyMatrix) -> float:
    """Sum the covered entries; identical on exact and noisy matrices."""
    query.validate(matrix.schema)
    region = tuple(slice(lo, hi + 1) for lo, hi in storage_spans(query, matrix.schema))
    return float(matrix.entries[region].sum())


def covered_count(query: RangeQuery, schema: Schema) -> int:
    query.validate(schema)
    count = 1
    for lo, hi in storage_spans(query, schema):
        count *= hi - lo + 1
    return count


def coverage(query: RangeQuery, schema: Schema) -> float:
    """Covered fraction of the matrix; the denominator is the full entry
    count including ordinal padding."""
    return covered_count(query, schema) / schema.size


def selectivity(query: RangeQuery, exact: FrequencyMatrix) -> float:
    """Fraction of tuples satisfying the query, from the exact matrix."""
    if exact.tuple_count <= 0:
        return 0.0
    return evaluate(query, exact) / exact.tuple_count


def relative_error(noisy: float, exact: float, sanity_bound: float) -> float:
    """|noisy - exact| / max(exact, s) with a positive sanity bound s."""
    if sanity_bound <= 0:
        raise ValueError(f"sanity bound must be positive, got {sanity_bound}")
    return abs(noisy - exact) / max(exact, sanity_bound)


def default_sanity_bound(tuple_count: int, fraction: float = 0.001) -> float:
    return fraction * tuple_count


@dataclass(frozen=True)
class QueryMetrics:
    selectivity: float
    coverage: float
    exact: float
    noisy: float
    square_error: float
    relative_error: float


def compute_metrics(
    query: RangeQuery,
    exact: FrequencyMatrix,
    noisy: FrequencyMatrix,
    sanity_bound: float,
) -> QueryMetrics:
    act = evaluate(query, exact)
    est = evaluate(query, noisy)
    return QueryMetrics(
        selectivity=(act / exact.tuple_count) if exact.tuple_count > 0 else 0.0,
        coverage=coverage(query, exact.schema),
        exact=act,
        noisy=est,
        square_error=(est - act) ** 2,
        relative_error=relative_error(est, act, sanity_bound),
    )


def generate_workload(schema: Schema, count: int, seed: int) -> list[RangeQuery]:
    """Random queries: predicate count uniform in [1, min(4, d)],
    attributes sampled without replacement; ordinal predicates are
    uniform random sub-intervals, nominal ones a uniform random non-root
    hierarchy node."""
    if count < 0:
        raise ValidationError("query count must be non-negative")
    rng = np.random.default_rng(seed)
    d = len(schema)
    queries = []
    for _ in range(count):
        k = int(rng.integers(1, min(4, d) + 1))
        picked = rng.choice(d, size=k, replace=False)
        preds: dict[str, Interval | Subtree] = {}
        for j in sorted(int(x) for x in picked):
            attr = schema.attributes[j]
            if attr.kind == ORDINAL:
                a, b = rng.integers(0, attr.domain_size, size=2)
                preds[attr.name] = Interval(lo=int(min(a, b)), hi=int(max(a, b)))
            else:
                node = int(rng.integers(1, attr.hierarchy.num_nodes))
                preds[attr.name] = Subtree(node=node)
        queries.append(RangeQuery(predicates=preds))
    return queries


def format_query(query: RangeQuery, schema: Schema) -> str:
    parts = []
    for attr in schema:
        pred = query.predicates.get(attr.name)
        if pred is None:
            continue
        if isinstance(pred, Interval):
            parts.append(f"{attr.name}={pred.lo}..{pred.hi}")
        else:
            parts.append(f"{attr.name}=@{attr.hierarchy.node_path(pred.node)}")
    return "&".join(parts)


def parse_query(line: str, schema: Schema) -> RangeQuery:
    """Parse `attr=lo..hi` / `attr=@node/path` clauses joined by `&`."""
    preds: dict[str, Interval | Subtree] = {}
    line = line.strip()
    if not line:
        return RangeQuery(predicates=preds)
    for clause in line.split("&"):
        if "=" not in clause:
            raise ValidationError(f"malformed clause {clause!r} (expected attr=...)")
        name, _, rhs = clause.partition("=")
        name, rhs = name.strip(), rhs.strip()
        attr = schema.attribute(name)
        if name in preds:
            raise ValidationError(f"attribute {name!r} constrained twice")
        if rhs.startswith("@"):
            if attr.kind != NOMINAL:
                raise ValidationError(f"{name!r}: node predicate on an ordinal attribute")
            preds[name] = Subtree(node=attr.hierarchy.resolve_path(rhs[1:]))
        else:
            if ".." not in rhs:
                raise ValidationError(f"{name!r}: expected lo..hi, got {rhs!r}")
            lo_s, _, hi_s = rhs.partition("..")
            try:
                lo, hi = int(lo_s), int(hi_s)
            except ValueError:
                raise ValidationError(f"{name!r}: non-integer interval {rhs!r}") from None
            preds[name] = Interval(lo=lo, hi=hi)
    q = RangeQuery(predicates=preds)
    q.validate(schema)
    return q


def read_workload(path, schema: Schema) -> list[RangeQuery]:
    queries = []
    with open(path, "r", encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                queries.append(parse_query(line, schema))
            except ValidationError as exc:
                raise ValidationError(f"{path}:{i + 1}: {exc}") from None
    return queries


def write_workload(queries: list[RangeQuery], schema: Schema, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for q in queries:
            fh.write(format_query(q, schema) + "\n")
