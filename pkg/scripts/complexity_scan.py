#!/usr/bin/env python3
"""Desk-scale runtime/depth scan over random Gibbs-sampling instances.

Emits complexity_scan.csv and complexity_summary.csv under --out.  Defaults
are sized for a coffee-break run; raise --instances/--n for the full sweep.
"""

import sys

from fragqite.cli import main

DEFAULTS = [
    "complexity-scan",
    "--classes", "weighted_maxcut,rbm,sk_heisenberg",
    "--n", "6,8",
    "--instances", "10",
    "--eps", "0.001",
    "--beta-min", "1", "--beta-max", "10000", "--beta-points", "13",
    "--rmax", "8",
    "--seed", "7",
    "--out", "out/complexity",
]

if __name__ == "__main__":
    sys.exit(main(DEFAULTS + sys.argv[1:]))
