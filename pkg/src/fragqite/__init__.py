"""Fragmented imaginary-time evolution toolkit.

Exact desk-scale simulation and query accounting for post-selected
imaginary-time propagator synthesis: Chebyshev- and Fourier-route pulse
primitives, repeat-until-success / amplified / fragmented master runs,
schedule optimization, the parity-reduction query floor, and seeded
experiment pipelines.
"""

from . import bounds, cli, funcapprox, hamiltonians, master, parity, qsp, schedules, simulator
from .hamiltonians import (
    HamiltonianSpec,
    PauliTerm,
    Spectrum,
    diagonalize,
    gen_ensemble,
    gibbs_post_selection,
    inverse_success_prob,
    rescale,
    success_prob,
)
from .master import ComplexityReport, ErrorBudget, RunStats, Schedule

__version__ = "0.1.0"

__all__ = [
    "bounds",
    "cli",
    "funcapprox",
    "hamiltonians",
    "master",
    "parity",
    "qsp",
    "schedules",
    "simulator",
    "HamiltonianSpec",
    "PauliTerm",
    "Spectrum",
    "Schedule",
    "ErrorBudget",
    "ComplexityReport",
    "RunStats",
    "gen_ensemble",
    "rescale",
    "diagonalize",
    "success_prob",
    "inverse_success_prob",
    "gibbs_post_selection",
]
