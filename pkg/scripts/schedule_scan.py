#!/usr/bin/env python3
"""Optimal fragment counts and exponents versus inverse temperature.

Emits schedule_scan.csv and schedule_fits.json under --out.
"""

import sys

from fragqite.cli import main

DEFAULTS = [
    "schedule-scan",
    "--classes", "weighted_maxcut",
    "--n", "5,10",
    "--instances", "10",
    "--eps", "0.001",
    "--beta-min", "10", "--beta-max", "10000", "--beta-points", "13",
    "--rmax", "8",
    "--seed", "7",
    "--out", "out/schedules",
]

if __name__ == "__main__":
    sys.exit(main(DEFAULTS + sys.argv[1:]))
