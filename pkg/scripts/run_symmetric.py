#!/usr/bin/env python3
"""Symmetric market: uniform latency, access probabilities drawn per round.

Estimates the 66-profile payoff table, sweeps the ranking intensity, and
writes all artifacts (payoff table, stationary distribution, sweep curve,
summary row) under the output directory.
"""
import argparse
import sys

from mevboost_egta.cli import main as cli_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sims", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=10007)
    parser.add_argument("--out", default="results/symmetric")
    parser.add_argument("--workers", type=int, default=2)
    args = parser.parse_args()
    return cli_main([
        "scenario", "--game", "symmetric",
        "--sims", str(args.sims), "--seed", str(args.seed),
        "--out", args.out, "--workers", str(args.workers),
    ])


if __name__ == "__main__":
    sys.exit(main())
