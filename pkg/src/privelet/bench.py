"""Benchmark harness: workload execution with coverage/selectivity
bucketing, and the linear-scaling timing runs."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import mechanisms, multidim, queries
from .data import (
    Dataset,
    FrequencyMatrix,
    build_frequency_matrix,
    generate_synthetic,
    three_level_hierarchy,
)
from .mechanisms import METHODS
from .oracle import trial_seed
from .schema import Schema, ValidationError, nominal_attribute, ordinal_attribute


@dataclass
class BenchConfig:
    n: int
    m: int
    seed: int
    methods: tuple[str, ...] = ("basic", "privelet+")
    epsilons: tuple[float, ...] = (1.0,)
    split: tuple[str, ...] | str = "auto"
    query_count: int = 40000
    bucket_count: int = 5
    sanity_fraction: float = 0.001

    def __post_init__(self):
        for m in self.methods:
            if m not in METHODS:
                raise ValidationError(f"unknown method {m!r}")
        if any(e <= 0 for e in self.epsilons):
            raise ValidationError("epsilons must be positive")
        if self.bucket_count < 1:
            raise ValidationError("bucket count must be at least 1")
        if self.query_count < 0:
            raise ValidationError("query count must be non-negative")


@dataclass
class BenchResult:
    rows: list[dict]
    metadata: dict


def bucket_rows(metrics: list[queries.QueryMetrics], key: str, bucket_count: int) -> list[dict]:
    """Partition queries into quantile groups of the given key by stable
    sorted-order index cuts; group sizes differ by at most one, and tied
    key values are assigned in query order (lower buckets first)."""
    keys = np.array([getattr(m, key) for m in metrics])
    order = np.lexsort((np.arange(len(keys)), keys))
    rows = []
    for b, idx in enumerate(np.array_split(order, bucket_count)):
        if idx.size == 0:
            continue
        chunk = [metrics[i] for i in idx]
        rows.append(
            {
                "bucket_kind": key,
                "bucket": b,
                "queries": len(chunk),
                "avg_coverage": float(np.mean([c.coverage for c in chunk])),
                "avg_selectivity": float(np.mean([c.selectivity for c in chunk])),
                "avg_square_error": float(np.mean([c.square_error for c in chunk])),
                "avg_relative_error": float(np.mean([c.relative_error for c in chunk])),
            }
        )
    return rows


def run_benchmark(cfg: BenchConfig, exact: FrequencyMatrix | None = None) -> BenchResult:
    """Publish per (method, epsilon), evaluate the workload exactly and
    noisily, and emit per-bucket average errors bucketed by coverage and
    (separately) by selectivity.

    Bucket averages are over raw (not log-scaled) coverage/selectivity.
    The noise seed is derived from the config seed and the epsilon index
    only, so all methods at one epsilon are seed-matched.
    """
    if cfg.query_count < cfg.bucket_count:
        raise ValidationError(
            f"cannot form {cfg.bucket_count} non-empty buckets from {cfg.query_count} queries"
        )
    if exact is None:
        dataset = generate_synthetic(cfg.n, cfg.m, cfg.seed)
        exact = build_frequency_matrix(dataset)
    schema = exact.schema
    split: tuple[str, ...]
    if cfg.split == "auto":
        split = mechanisms.suggest_split(schema)
    else:
        split = tuple(cfg.split)
    workload = queries.generate_workload(schema, cfg.query_count, cfg.seed)
    sanity = queries.default_sanity_bound(exact.tuple_count, cfg.sanity_fraction)
    if sanity <= 0:
        raise ValidationError("relative error needs a positive sanity bound; the dataset is empty")

    rows: list[dict] = []
    for ei, eps in enumerate(cfg.epsilons):
        publish_seed = trial_seed(cfg.seed, ei)
        for method in cfg.methods:
            result = mechanisms.publish(
                exact, method=method, epsilon=eps, split=split, seed=publish_seed
            )
            metrics = [
                queries.compute_metrics(q, exact, result.matrix, sanity) for q in workload
            ]
            for row in bucket_rows(metrics, "coverage", cfg.bucket_count):
                rows.append({"method": method, "epsilon": eps, **row})
            for row in bucket_rows(metrics, "selectivity", cfg.bucket_count):
                rows.append({"method": method, "epsilon": eps, **row})
    metadata = {
        "n": exact.tuple_count,
        "m": schema.size,
        "seed": cfg.seed,
        "split": list(split),
        "query_count": cfg.query_count,
        "bucket_count": cfg.bucket_count,
        "sanity_bound": sanity,
        "bucket_average": "raw (not log-scaled) coverage and selectivity",
        "schema_hash": schema.content_hash(),
    }
    return BenchResult(rows=rows, metadata=metadata)


BENCH_COLUMNS = (
    "method",
    "epsilon",
    "bucket_kind",
    "bucket",
    "queries",
    "avg_coverage",
    "avg_selectivity",
    "avg_square_error",
    "avg_relative_error",
)


def write_bench_csv(rows: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(BENCH_COLUMNS) + "\n")
        for row in rows:
            fields = []
            for col in BENCH_COLUMNS:
                v = row[col]
                fields.append(f"{v:.12g}" if isinstance(v, float) else str(v))
            fh.write(",".join(fields) + "\n")


def timing_schema(m: int) -> Schema:
    """Four attributes (two ordinal, two nominal) whose sizes multiply
    to m exactly; m must be a power of two >= 2**8 so the total can be
    doubled while every nominal attribute keeps a valid 3-level
    hierarchy."""
    if m < 256 or (m & (m - 1)) != 0:
        raise ValidationError(f"timing matrix size must be a power of two >= 256, got {m}")
    j = m.bit_length() - 1
    exps = [j // 4 + (1 if r < j % 4 else 0) for r in range(4)]
    return Schema(
        attributes=(
            ordinal_attribute("ord1", range(1 << exps[0])),
            ordinal_attribute("ord2", range(1 << exps[1])),
            nominal_attribute("nom1", three_level_hierarchy("a", 1 << exps[2])),
            nominal_attribute("nom2", three_level_hierarchy("b", 1 << exps[3])),
        )
    )


def _timed(fn, repeats: int) -> tuple[float, object]:
    """Median wall-clock seconds over `repeats` runs after one untimed
    warmup (first-touch page faults would otherwise dominate the first
    sample); returns the last result."""
    out = fn()
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        samples.append(time.perf_counter() - t0)
    return float(np.median(samples)), out


def run_timing(
    n_list: list[int], m_list: list[int], seed: int, repeats: int = 3, epsilon: float = 1.0
) -> list[dict]:
    """Wall-clock per phase (ingest, transform, noise, inverse) for the
    basic mechanism and for privelet+ with an empty split, across the
    (n, m) grid.  Row generation is excluded from the timings."""
    rows = []
    for m in m_list:
        schema = timing_schema(m)
        dims = [a.domain_size for a in schema]
        for n in n_list:
            rng = np.random.default_rng(trial_seed(seed, m))
            raw = np.empty((n, 4), dtype=np.int64)
            for j, size in enumerate(dims):
                raw[:, j] = rng.integers(0, size, size=n)
            dataset = Dataset(schema=schema, rows=raw)

            t_ingest, matrix = _timed(lambda: build_frequency_matrix(dataset), repeats)

            lam_basic = mechanisms.budget_for(schema, schema.names, epsilon).lam
            t_basic_noise, _ = _timed(
                lambda: mechanisms.basic_publish(matrix, lam_basic, seed), repeats
            )
            rows.append(
                {
                    "method": "basic",
                    "n": n,
                    "m": m,
                    "ingest": t_ingest,
                    "transform": 0.0,
                    "noise": t_basic_noise,
                    "inverse": 0.0,
                    "total": t_ingest + t_basic_noise,
                }
            )

            lam = mechanisms.budget_for(schema, (), epsilon).lam
            t_fwd, coeffs = _timed(lambda: multidim.forward(matrix), repeats)

            def add_noise():
                rng_n = np.random.default_rng(seed)
                u = rng_n.random(coeffs.values.shape)
                return coeffs.values + mechanisms.laplace_from_uniform(u, lam / coeffs.weights)

            t_noise, noisy_values = _timed(add_noise, repeats)
            noisy = multidim.CoefficientMatrix(
                schema=schema,
                values=noisy_values,
                weights=coeffs.weights,
                split=(),
                tuple_count=matrix.tuple_count,
            )
            t_inv, _ = _timed(lambda: multidim.inverse(noisy), repeats)
            rows.append(
                {
                    "method": "privelet+",
                    "n": n,
                    "m": m,
                    "ingest": t_ingest,
                    "transform": t_fwd,
                    "noise": t_noise,
                    "inverse": t_inv,
                    "total": t_ingest + t_fwd + t_noise + t_inv,
                }
            )
    return rows


TIMING_COLUMNS = ("method", "n", "m", "ingest", "transform", "noise", "inverse", "total")


def write_timing_csv(rows: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(TIMING_COLUMNS) + "\n")
        for row in rows:
            fields = []
            for col in TIMING_COLUMNS:
                v = row[col]
                fields.append(f"{v:.6g}" if isinstance(v, float) else str(v))
            fh.write(",".join(fields) + "\n")
