#!/usr/bin/env python3
"""Parity-from-cooling demo rows plus the matching query floor."""

import sys

from fragqite.cli import main

DEFAULTS = [
    "parity-demo",
    "--n-min", "2", "--n-max", "8",
    "--beta", "6", "--eps", "1e-6", "--alpha", "1.0",
    "--out", "out/parity_demo.csv",
]

if __name__ == "__main__":
    sys.exit(main(DEFAULTS + sys.argv[1:]))
