#!/usr/bin/env python3
"""Histogram of first-fragment sizes relative to the crossover width."""

import sys

from fragqite.cli import main

DEFAULTS = [
    "histogram",
    "--classes", "weighted_maxcut,sk_heisenberg",
    "--n", "5,8",
    "--instances", "10",
    "--eps", "0.001",
    "--beta-min", "10", "--beta-max", "2000", "--beta-points", "9",
    "--rmax", "8",
    "--seed", "7",
    "--out", "out/histogram",
]

if __name__ == "__main__":
    sys.exit(main(DEFAULTS + sys.argv[1:]))
