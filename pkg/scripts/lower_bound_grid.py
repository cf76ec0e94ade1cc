#!/usr/bin/env python3
"""Query floor versus the even-rounded upper bound over a beta grid."""

import sys

from fragqite.cli import main

DEFAULTS = [
    "lower-bound",
    "--beta-min", "0.1", "--beta-max", "100",
    "--points", "60", "--eps", "1e-3",
    "--out", "out/lower_bound.csv",
]

if __name__ == "__main__":
    sys.exit(main(DEFAULTS + sys.argv[1:]))
