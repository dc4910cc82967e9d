"""Command-line surface.

Exit codes: 0 success, 1 usage error, 2 validation failure,
3 verification failure.  Every command is deterministic under --seed;
re-running with identical flags produces byte-identical output files
(the `time` command reports wall-clock measurements and is the one
exception).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import bench, data, mechanisms, oracle, queries, storage
from .schema import ValidationError, load_schema, save_schema

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_VERIFICATION = 3


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _split_arg(value: str) -> tuple[str, ...] | str:
    value = value.strip()
    if value == "auto":
        return "auto"
    if value in ("", "none"):
        return ()
    return tuple(s.strip() for s in value.split(",") if s.strip())


def cmd_synth(args) -> int:
    dataset = data.generate_synthetic(args.n, args.m, args.seed)
    save_schema(dataset.schema, args.schema)
    data.write_dataset_csv(dataset, args.data, delimiter=args.delimiter)
    print(f"wrote {dataset.n} rows to {args.data}, schema to {args.schema}")
    return EXIT_OK


def cmd_ingest(args) -> int:
    schema = load_schema(args.schema)
    dataset = data.read_dataset_csv(args.data, schema, delimiter=args.delimiter)
    matrix = data.build_frequency_matrix(dataset)
    storage.write_matrix(matrix, args.out, metadata={"source": str(args.data)})
    print(f"ingested {dataset.n} rows into {matrix.size} entries -> {args.out}")
    return EXIT_OK


def cmd_publish(args) -> int:
    schema = load_schema(args.schema)
    matrix, _ = storage.read_matrix(args.matrix, schema)
    split = _split_arg(args.split)
    if split == "auto":
        split = mechanisms.suggest_split(schema)
    result = mechanisms.publish(
        matrix,
        method=args.method,
        epsilon=args.epsilon,
        split=split,
        seed=args.seed,
        keep_coefficients=args.dump_coefficients is not None,
    )
    storage.write_matrix(result.matrix, args.out, metadata=result.metadata)
    if args.dump_coefficients is not None:
        storage.write_coefficients(
            result.coefficients, args.dump_coefficients, metadata=result.metadata
        )
    print(
        f"published {args.method} epsilon={args.epsilon} lambda={result.budget.lam:.6g} "
        f"split={list(result.split)} -> {args.out}"
    )
    return EXIT_OK


def cmd_query(args) -> int:
    schema = load_schema(args.schema)
    noisy, _ = storage.read_matrix(args.matrix, schema)
    exact, _ = storage.read_matrix(args.exact, schema)
    workload = queries.read_workload(args.queries, schema)
    sanity = queries.default_sanity_bound(exact.tuple_count, args.sanity_fraction)
    if sanity <= 0:
        raise ValidationError(
            "sanity bound is not positive; the exact matrix has no tuples"
        )
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("query,exact,noisy,selectivity,coverage,square_error,relative_error\n")
        for i, q in enumerate(workload):
            metrics = queries.compute_metrics(q, exact, noisy, sanity)
            fh.write(
                f"{i},{metrics.exact:.12g},{metrics.noisy:.12g},"
                f"{metrics.selectivity:.12g},{metrics.coverage:.12g},"
                f"{metrics.square_error:.12g},{metrics.relative_error:.12g}\n"
            )
    print(f"evaluated {len(workload)} queries -> {args.out}")
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = bench.BenchConfig(
        n=args.n,
        m=args.m,
        seed=args.seed,
        methods=tuple(s.strip() for s in args.methods.split(",") if s.strip()),
        epsilons=tuple(float(s) for s in args.epsilons.split(",") if s.strip()),
        split=_split_arg(args.split),
        query_count=args.queries,
        bucket_count=args.buckets,
        sanity_fraction=args.sanity_fraction,
    )
    result = bench.run_benchmark(cfg)
    out_dir = args.out_dir
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "bench_metadata.json"), "w", encoding="utf-8") as fh:
        json.dump(result.metadata, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for method in cfg.methods:
        for eps in cfg.epsilons:
            rows = [
                r for r in result.rows if r["method"] == method and r["epsilon"] == eps
            ]
            name = f"bench_{method.replace('+', 'plus')}_eps{eps:g}.csv"
            bench.write_bench_csv(rows, os.path.join(out_dir, name))
    print(f"benchmark complete: {len(result.rows)} bucket rows -> {out_dir}")
    return EXIT_OK


def cmd_time(args) -> int:
    n_list = [int(s) for s in args.n_list.split(",") if s.strip()]
    m_list = [int(s) for s in args.m_list.split(",") if s.strip()]
    rows = bench.run_timing(n_list, m_list, args.seed, repeats=args.repeats)
    bench.write_timing_csv(rows, args.out)
    print(f"timed {len(rows)} runs -> {args.out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    ok, lines = oracle.run_verification(level=args.level, seed=args.seed)
    for line in lines:
        print(line)
    return EXIT_OK if ok else EXIT_VERIFICATION


def build_parser() -> Parser:
    parser = Parser(prog="privelet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    p = sub.add_parser("synth", help="generate a synthetic dataset and its schema")
    p.add_argument("--n", type=int, required=True, help="tuple count")
    p.add_argument("--m", type=int, required=True, help="total domain size (a fourth power)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--data", required=True, help="output CSV path")
    p.add_argument("--schema", required=True, help="output schema JSON path")
    p.add_argument("--delimiter", default=",")
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("ingest", help="tally a dataset into a frequency matrix")
    p.add_argument("--schema", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--delimiter", default=",")
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("publish", help="publish a noisy matrix under epsilon-DP")
    p.add_argument("--schema", required=True)
    p.add_argument("--matrix", required=True)
    p.add_argument("--method", required=True, choices=mechanisms.METHODS)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument(
        "--split",
        default="",
        help="comma-separated attributes to leave untransformed (privelet+); 'auto' applies the small-domain rule",
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--dump-coefficients", default=None, help="also dump the noisy coefficients")
    p.set_defaults(fn=cmd_publish)

    p = sub.add_parser("query", help="evaluate range-count queries against a noisy matrix")
    p.add_argument("--schema", required=True)
    p.add_argument("--matrix", required=True, help="noisy matrix")
    p.add_argument("--exact", required=True, help="exact matrix (for error metrics)")
    p.add_argument("--queries", required=True, help="query file, one query per line")
    p.add_argument("--sanity-fraction", type=float, default=0.001)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_query)

    p = sub.add_parser("bench", help="run the error-vs-coverage benchmark")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--methods", default="basic,privelet+")
    p.add_argument("--epsilons", default="1.0")
    p.add_argument("--split", default="auto")
    p.add_argument("--queries", type=int, default=40000)
    p.add_argument("--buckets", type=int, default=5)
    p.add_argument("--sanity-fraction", type=float, default=0.001)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("time", help="measure per-phase wall-clock across an (n, m) grid")
    p.add_argument("--n-list", required=True, help="comma-separated tuple counts")
    p.add_argument("--m-list", required=True, help="comma-separated matrix sizes (powers of two)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_time)

    p = sub.add_parser("verify", help="run the sensitivity/linearity/variance oracle suite")
    p.add_argument("--level", choices=("quick", "full"), default="quick")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
