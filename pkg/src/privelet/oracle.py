"""Independent brute-force verifiers for the mechanism's analytical
guarantees: measured generalized sensitivity vs the closed form,
Monte-Carlo query-noise variance vs the closed-form bounds, and
linearity of the transforms.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import mechanisms, multidim, queries
from .data import FrequencyMatrix
from .schema import Schema, ValidationError

EXHAUSTIVE_LIMIT = 4096
SAMPLED_POSITIONS = 256


def worker_count() -> int:
    """Thread count for Monte-Carlo trials, from PRIVELET_THREADS."""
    try:
        return max(1, int(os.environ.get("PRIVELET_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class SensitivityReport:
    measured_rho: float
    predicted_rho: float
    per_entry: np.ndarray  # weighted coefficient change per tested entry
    positions: np.ndarray  # flat storage indices tested
    mode: str

    @property
    def gap(self) -> float:
        return self.measured_rho - self.predicted_rho


def measure_sensitivity(
    schema: Schema,
    split: tuple[str, ...] = (),
    mode: str = "exhaustive",
    seed: int = 0,
    delta: float = 1.0,
) -> SensitivityReport:
    """Perturb entries one at a time by `delta`, re-run the transform,
    and accumulate the weighted absolute coefficient change.  The
    reported rho is the worst ratio over the tested positions.
    """
    if delta == 0:
        raise ValueError("delta must be nonzero")
    dims = schema.dims
    m = int(np.prod(dims))
    rng = np.random.default_rng(seed)
    if mode == "exhaustive":
        if m > EXHAUSTIVE_LIMIT:
            raise ValidationError(
                f"exhaustive mode needs m <= {EXHAUSTIVE_LIMIT}, got {m}; use mode='sampled'"
            )
        positions = np.arange(m)
    elif mode == "sampled":
        positions = np.sort(rng.choice(m, size=min(SAMPLED_POSITIONS, m), replace=False))
    else:
        raise ValueError(f"unknown mode {mode!r}")

    base = rng.integers(0, 8, size=dims).astype(np.float64)
    base_matrix = FrequencyMatrix(schema=schema, entries=base, tuple_count=int(base.sum()))
    ref = multidim.forward(base_matrix, split=split)
    predicted = 1.0
    for attr in schema:
        if attr.name not in split:
            predicted *= mechanisms.sensitivity_factor(attr)

    per_entry = np.empty(len(positions))
    for i, pos in enumerate(positions):
        bumped = base.copy().reshape(-1)
        bumped[pos] += delta
        bumped_matrix = FrequencyMatrix(
            schema=schema, entries=bumped.reshape(dims), tuple_count=base_matrix.tuple_count
        )
        coeffs = multidim.forward(bumped_matrix, split=split)
        per_entry[i] = float(
            np.sum(ref.weights * np.abs(coeffs.values - ref.values))
        ) / abs(delta)
    return SensitivityReport(
        measured_rho=float(per_entry.max()),
        predicted_rho=predicted,
        per_entry=per_entry,
        positions=np.asarray(positions),
        mode=mode,
    )


@dataclass(frozen=True)
class MechanismConfig:
    method: str
    lam: float
    split: tuple[str, ...] = ()

    def effective_split(self, schema: Schema) -> tuple[str, ...]:
        if self.method == mechanisms.METHOD_BASIC:
            return schema.names
        if self.method == mechanisms.METHOD_PRIVELET:
            return ()
        return tuple(self.split)


@dataclass(frozen=True)
class VarianceReport:
    query: queries.RangeQuery
    trials: int
    sample_variance: float
    bound: float
    standard_error: float

    @property
    def within_bound(self) -> bool:
        return self.sample_variance <= self.bound + 3.0 * self.standard_error


def trial_seed(seed: int, trial: int) -> int:
    """Stable per-trial sub-seed derivation."""
    return int(np.random.SeedSequence([int(seed), int(trial)]).generate_state(1, np.uint64)[0])


def mechanism_bound(config: MechanismConfig, schema: Schema) -> float:
    """Worst-case query variance for the configured mechanism at its
    noise level: 2*lam^2 times the split storage sizes times the
    variance factor H of every transformed attribute."""
    out = 2.0 * config.lam * config.lam
    split = config.effective_split(schema)
    for attr in schema:
        if attr.name in split:
            out *= attr.storage_size
        else:
            out *= mechanisms.variance_factor(attr)
    return out


def _indicator(query_list: list[queries.RangeQuery], schema: Schema) -> np.ndarray:
    rows = np.zeros((len(query_list), schema.size), dtype=np.float64)
    grid = np.zeros(schema.dims, dtype=np.float64)
    for i, q in enumerate(query_list):
        region = tuple(slice(lo, hi + 1) for lo, hi in queries.storage_spans(q, schema))
        grid[...] = 0.0
        grid[region] = 1.0
        rows[i] = grid.reshape(-1)
    return rows


def query_error_moments(
    config: MechanismConfig,
    matrix: FrequencyMatrix,
    query_list: list[queries.RangeQuery],
    trials: int,
    seed: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Publish `trials` times under distinct sub-seeds and accumulate,
    per query, the sum and sum of squares of the answer error.

    Trials may be spread over PRIVELET_THREADS threads; each trial owns a
    seed derived from its index, and partial sums are combined in chunk
    order, so the result does not depend on the thread count.
    """
    split = config.effective_split(matrix.schema)
    indicator = _indicator(query_list, matrix.schema)
    exact_flat = np.asarray(matrix.entries, dtype=np.float64).reshape(-1)

    def run_chunk(bounds: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = bounds
        sums = np.zeros(len(query_list))
        sumsqs = np.zeros(len(query_list))
        for t in range(lo, hi):
            noisy = mechanisms._noisy_publish(
                matrix, config.lam, split=split, seed=trial_seed(seed, t)
            )
            errs = indicator @ (noisy.entries.reshape(-1) - exact_flat)
            sums += errs
            sumsqs += errs * errs
        return sums, sumsqs

    workers = worker_count()
    if workers == 1:
        return run_chunk((0, trials))
    edges = np.linspace(0, trials, workers + 1, dtype=int)
    chunks = [(int(edges[i]), int(edges[i + 1])) for i in range(workers)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(run_chunk, chunks))
    total_sum = np.zeros(len(query_list))
    total_sq = np.zeros(len(query_list))
    for s, ss in parts:
        total_sum += s
        total_sq += ss
    return total_sum, total_sq


def sample_variances(sums: np.ndarray, sumsqs: np.ndarray, trials: int) -> np.ndarray:
    return (sumsqs - sums * sums / trials) / (trials - 1)


def estimate_query_variance(
    config: MechanismConfig,
    matrix: FrequencyMatrix,
    query: queries.RangeQuery,
    trials: int,
    seed: int,
) -> VarianceReport:
    """Monte-Carlo estimate of the noise variance in one query answer."""
    if trials < 10_000:
        raise ValidationError(f"need at least 10000 trials for a variance claim, got {trials}")
    sums, sumsqs = query_error_moments(config, matrix, [query], trials, seed)
    s2 = float(sample_variances(sums, sumsqs, trials)[0])
    return VarianceReport(
        query=query,
        trials=trials,
        sample_variance=s2,
        bound=mechanism_bound(config, matrix.schema),
        standard_error=s2 * np.sqrt(2.0 / (trials - 1)),
    )


def check_linearity(
    schema: Schema, trials: int, seed: int, split: tuple[str, ...] = ()
) -> tuple[bool, float]:
    """The sum of two matrices must transform to the sum of their
    coefficients.  Returns (passed, max relative residual) over random
    matrix pairs."""
    rng = np.random.default_rng(seed)
    dims = schema.dims
    worst = 0.0
    for _ in range(trials):
        a = rng.integers(0, 100, size=dims).astype(np.float64)
        b = rng.integers(0, 100, size=dims).astype(np.float64)
        fa = multidim.forward(FrequencyMatrix(schema, a, int(a.sum())), split=split).values
        fb = multidim.forward(FrequencyMatrix(schema, b, int(b.sum())), split=split).values
        fab = multidim.forward(FrequencyMatrix(schema, a + b, int((a + b).sum())), split=split).values
        scale = max(1.0, float(np.abs(fab).max()))
        worst = max(worst, float(np.abs(fa + fb - fab).max()) / scale)
    return worst < 1e-9, worst


def random_hierarchy(rng: np.random.Generator, height: int, max_fanout: int = 4, label: str = "n") -> dict:
    """Random tree spec of exactly the given height; every internal node
    has fanout in [2, max_fanout]."""
    if height < 2:
        raise ValueError("height must be at least 2")
    counter = [0]

    def build(level: int, force_deep: bool) -> dict:
        counter[0] += 1
        node = {"label": f"{label}{counter[0]}"}
        if level < height:
            fanout = int(rng.integers(2, max_fanout + 1))
            deep_child = int(rng.integers(0, fanout)) if level + 1 < height else -1
            kids = []
            for i in range(fanout):
                # keep one path at full depth; others may stop early
                if force_deep and i == deep_child:
                    kids.append(build(level + 1, True))
                elif level + 1 < height and rng.random() < 0.8:
                    kids.append(build(level + 1, False))
                else:
                    counter[0] += 1
                    kids.append({"label": f"{label}{counter[0]}"})
            node["children"] = kids
        return node

    return build(1, True)


def random_schema(rng: np.random.Generator, max_dims: int = 4, max_size: int = 4096) -> Schema:
    """Random mixed schema for verification runs; total entry count
    (padding included) stays at or below max_size."""
    from .schema import nominal_attribute, ordinal_attribute

    d = int(rng.integers(1, max_dims + 1))
    attrs = []
    budget = max_size
    for j in range(d):
        remaining = d - j - 1
        cap = max(2, budget // (2 ** remaining))
        if rng.random() < 0.5:
            size = int(rng.integers(2, min(9, cap) + 1))
            attrs.append(ordinal_attribute(f"a{j}", range(size)))
            used = attrs[-1].padded_size
        else:
            height = int(rng.integers(2, 4))
            spec = random_hierarchy(rng, height, max_fanout=3, label=f"a{j}_")
            attrs.append(nominal_attribute(f"a{j}", spec))
            used = attrs[-1].domain_size
        budget = max(2, budget // used)
    return Schema(attributes=tuple(attrs))


def all_interval_queries(schema: Schema, name: str) -> list[queries.RangeQuery]:
    """Every closed interval over the attribute's real domain."""
    attr = schema.attribute(name)
    return [
        queries.RangeQuery({name: queries.Interval(lo, hi)})
        for lo in range(attr.domain_size)
        for hi in range(lo, attr.domain_size)
    ]


def all_node_queries(schema: Schema, name: str) -> list[queries.RangeQuery]:
    """One subtree query per hierarchy node, the root included."""
    attr = schema.attribute(name)
    return [
        queries.RangeQuery({name: queries.Subtree(node)})
        for node in range(attr.hierarchy.num_nodes)
    ]


def _verification_schemas():
    from .data import three_level_hierarchy
    from .schema import nominal_attribute, ordinal_attribute

    haar_cases = [
        (f"haar m={m}", Schema((ordinal_attribute("a", range(m)),)))
        for m in (2, 8, 64)
    ]
    flat = {"label": "root", "children": [{"label": f"v{i}"} for i in range(6)]}
    deep = {
        "label": "root",
        "children": [
            {
                "label": f"g{i}",
                "children": [
                    {
                        "label": f"g{i}{j}",
                        "children": [{"label": f"v{i}{j}{k}"} for k in range(2)],
                    }
                    for j in range(2)
                ],
            }
            for i in range(2)
        ],
    }
    nominal_cases = [
        ("nominal h=2", Schema((nominal_attribute("a", flat),))),
        ("nominal h=3", Schema((nominal_attribute("a", three_level_hierarchy("v", 9, 3)),))),
        ("nominal h=4", Schema((nominal_attribute("a", deep),))),
    ]
    mixed2 = Schema(
        (
            ordinal_attribute("x", range(4)),
            nominal_attribute("y", three_level_hierarchy("v", 4, 2)),
        )
    )
    mixed3 = Schema(
        (
            ordinal_attribute("x", range(4)),
            nominal_attribute("y", three_level_hierarchy("v", 4, 2)),
            ordinal_attribute("z", range(2)),
        )
    )
    mixed_cases = [("mixed d=2", mixed2), ("mixed d=3", mixed3)]
    return haar_cases, nominal_cases, mixed_cases


def run_verification(level: str = "quick", seed: int = 0) -> tuple[bool, list[str]]:
    """Full self-check: sensitivity equalities, budget accounting,
    linearity, and Monte-Carlo variance bounds.  Returns (ok, report
    lines); the report is stable for a fixed seed and level."""
    from .data import three_level_hierarchy
    from .schema import nominal_attribute, ordinal_attribute

    full = level == "full"
    trials = 100_000 if full else 10_000
    pair_count = 100 if full else 20
    ok = True
    lines = [f"verification level={level} seed={seed} trials={trials}"]

    haar_cases, nominal_cases, mixed_cases = _verification_schemas()
    for label, schema in haar_cases + nominal_cases + mixed_cases:
        report = measure_sensitivity(schema, mode="exhaustive", seed=seed)
        lines.append(format_sensitivity_report(label, report))
        if abs(report.measured_rho - report.predicted_rho) > 1e-9:
            ok = False

    # budget accounting: epsilon_for(lam) * lam / 2 must equal measured rho
    _, _, mixed = _verification_schemas()
    schema = mixed[1][1]
    for split in ((), ("x",), ("y",), schema.names):
        report = measure_sensitivity(schema, split=split, mode="exhaustive", seed=seed)
        implied = mechanisms.epsilon_for(2.0, schema, split) * 2.0 / 2.0
        gap = abs(report.measured_rho - implied)
        lines.append(
            f"accounting split={list(split)}: measured={report.measured_rho:.12g} "
            f"implied={implied:.12g} gap={gap:.3e}"
        )
        if gap > 1e-9:
            ok = False

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(pair_count):
        _, residual = check_linearity(random_schema(rng), trials=1, seed=int(rng.integers(2**63)))
        worst = max(worst, residual)
    lines.append(f"linearity: pairs={pair_count} max_residual={worst:.3e}")
    if worst >= 1e-9:
        ok = False

    # variance bounds (Monte-Carlo)
    def check_bounds(label, config, matrix, query_list, two_sided_target=None):
        nonlocal ok
        sums, sumsqs = query_error_moments(config, matrix, query_list, trials, seed)
        variances = sample_variances(sums, sumsqs, trials)
        worst_i = int(np.argmax(variances))
        s2 = float(variances[worst_i])
        se = s2 * np.sqrt(2.0 / (trials - 1))
        if two_sided_target is not None:
            good = abs(s2 - two_sided_target) <= 3.0 * se
            lines.append(
                f"variance {label}: sample={s2:.6g} target={two_sided_target:.6g} "
                f"se={se:.3g} trials={trials} {'ok' if good else 'VIOLATION'}"
            )
        else:
            bound = mechanism_bound(config, matrix.schema)
            good = s2 <= bound + 3.0 * se
            lines.append(
                f"variance {label}: worst_sample={s2:.6g} bound={bound:.6g} "
                f"se={se:.3g} queries={len(query_list)} trials={trials} "
                f"{'ok' if good else 'VIOLATION'}"
            )
        ok = ok and good

    rng = np.random.default_rng(seed)
    schema1 = Schema((ordinal_attribute("a", range(8)),))
    m1 = FrequencyMatrix(schema1, rng.integers(0, 50, size=8).astype(float), 100)
    check_bounds(
        "basic single-entry",
        MechanismConfig(mechanisms.METHOD_BASIC, lam=1.0),
        m1,
        [queries.RangeQuery({"a": queries.Interval(3, 3)})],
        two_sided_target=2.0,
    )

    schema64 = Schema((ordinal_attribute("a", range(64)),))
    m64 = FrequencyMatrix(schema64, rng.integers(0, 50, size=64).astype(float), 1000)
    check_bounds(
        "haar worst interval m=64",
        MechanismConfig(mechanisms.METHOD_PRIVELET, lam=1.0),
        m64,
        all_interval_queries(schema64, "a"),
    )

    schema_nom = Schema((nominal_attribute("a", three_level_hierarchy("v", 64, 8)),))
    mn = FrequencyMatrix(schema_nom, rng.integers(0, 50, size=64).astype(float), 1000)
    check_bounds(
        "nominal all nodes 64 leaves",
        MechanismConfig(mechanisms.METHOD_PRIVELET, lam=1.0),
        mn,
        all_node_queries(schema_nom, "a"),
    )

    schema_mix = Schema(
        (
            ordinal_attribute("x", range(8)),
            nominal_attribute("y", three_level_hierarchy("v", 9, 3)),
        )
    )
    mm = FrequencyMatrix(schema_mix, rng.integers(0, 50, size=(8, 9)).astype(float), 1000)
    check_bounds(
        "mixed 2-d random queries",
        MechanismConfig(mechanisms.METHOD_PRIVELET, lam=1.0),
        mm,
        queries.generate_workload(schema_mix, 10, seed),
    )

    lines.append("result: " + ("all checks passed" if ok else "violations found"))
    return ok, lines


def format_sensitivity_report(label: str, report: SensitivityReport) -> str:
    return (
        f"sensitivity {label}: measured={report.measured_rho:.12g} "
        f"predicted={report.predicted_rho:.12g} gap={report.gap:.3e} "
        f"mode={report.mode} positions={len(report.positions)}"
    )


def format_variance_report(label: str, report: VarianceReport) -> str:
    status = "ok" if report.within_bound else "VIOLATION"
    return (
        f"variance {label}: sample={report.sample_variance:.6g} "
        f"bound={report.bound:.6g} se={report.standard_error:.3g} "
        f"trials={report.trials} {status}"
    )
