#!/usr/bin/env python3
"""Orderflow-tier market: five builders at 30% access vs five swept 40%..100%."""
import argparse
import sys

from mevboost_egta.cli import main as cli_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sims", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=10007)
    parser.add_argument("--out", default="results/orderflow")
    parser.add_argument("--workers", type=int, default=2)
    args = parser.parse_args()
    return cli_main([
        "scenario", "--game", "orderflow",
        "--sims", str(args.sims), "--seed", str(args.seed),
        "--out", args.out, "--workers", str(args.workers),
    ])


if __name__ == "__main__":
    sys.exit(main())
