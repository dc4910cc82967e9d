#!/usr/bin/env python3
"""Linear-scaling measurement: per-phase wall-clock across an (n, m) grid
for the per-entry and the wavelet publication pipelines.

Example:
    python scripts/scaling_grid.py --n-list 1000000,2000000,4000000 \
        --m-list 1048576 --out timing.csv
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from privelet import bench


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n-list", default="1000000,2000000")
    parser.add_argument("--m-list", default=str(2**20))
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--out", default="timing.csv")
    args = parser.parse_args()

    rows = bench.run_timing(
        [int(s) for s in args.n_list.split(",")],
        [int(s) for s in args.m_list.split(",")],
        seed=args.seed,
        repeats=args.repeats,
    )
    bench.write_timing_csv(rows, args.out)
    header = f"{'method':10s} {'n':>9s} {'m':>9s} {'ingest':>9s} {'transform':>10s} {'noise':>9s} {'inverse':>9s} {'total':>9s}"
    print(header)
    for r in rows:
        print(
            f"{r['method']:10s} {r['n']:9d} {r['m']:9d} {r['ingest']:9.4f} "
            f"{r['transform']:10.4f} {r['noise']:9.4f} {r['inverse']:9.4f} {r['total']:9.4f}"
        )
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
