#!/usr/bin/env python3
"""Critical inverse temperatures versus qubit count, with 2^(eta N) fits.

Emits beta_crit.csv and beta_crit_fit.json under --out.
"""

import sys

from fragqite.cli import main

DEFAULTS = [
    "beta-crit",
    "--classes", "weighted_maxcut,maxcut",
    "--n", "6,8,10,12",
    "--instances", "10",
    "--eps", "0.001",
    "--beta-min", "10", "--beta-max", "10000", "--beta-points", "13",
    "--rmax", "8",
    "--seed", "7",
    "--out", "out/beta_crit",
]

if __name__ == "__main__":
    sys.exit(main(DEFAULTS + sys.argv[1:]))
