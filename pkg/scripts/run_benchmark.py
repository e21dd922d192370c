"""Baseline / Sum / Concat over several seeds on the default synthetic corpus.

Writes table.txt and per_seed.tsv to the output directory and prints the
frequency-class, depth, boundary and silhouette tables.

    python3 scripts/run_benchmark.py --out results/benchmark --seeds 5 --workers 1
"""
import argparse
import sys

from labelcomp.cli import run


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="results/benchmark")
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--extended", action="store_true",
                   help="use the 200-leaf hierarchy (8 x 5 x 5) instead of the default 36 leaves")
    args = p.parse_args()
    argv = ["benchmark", "--seeds", str(args.seeds), "--workers", str(args.workers), "--out", args.out]
    if args.extended:
        argv += ["--n-top-types", "8", "--n-mid-per-top", "5", "--n-leaf-per-mid", "5"]
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
