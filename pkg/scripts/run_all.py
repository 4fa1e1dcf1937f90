#!/usr/bin/env python3
"""All three market suites into one artifact directory (one summary.csv)."""
import argparse
import sys

from mevboost_egta.cli import main as cli_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sims", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=10007)
    parser.add_argument("--out", default="results/full")
    parser.add_argument("--workers", type=int, default=2)
    args = parser.parse_args()
    return cli_main([
        "scenario", "--game", "all",
        "--sims", str(args.sims), "--seed", str(args.seed),
        "--out", args.out, "--workers", str(args.workers),
    ])


if __name__ == "__main__":
    sys.exit(main())
