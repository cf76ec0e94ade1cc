"""Query floor for imaginary-time propagator synthesis from encoded oracles.

Any circuit producing an (eps', alpha)-encoding of exp(-beta (H - lambda_min))
from calls to an encoding oracle must spend at least q~ queries, where q~ is
the unique positive solution of

    ((1 - e^{-beta/(4 q~)}) / 2)^(2 q~) = 2 eps' / alpha.

The left side decreases monotonically in q~ (from 1 at q~ -> 0+), so the
solution is found by bracketed bisection in the log domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import funcapprox as fa


@dataclass(frozen=True)
class LowerBoundQuery:
    beta: float
    eps_prime: float
    alpha: float
    q_tilde: float
    residual: float


def _log_lhs(beta: float, q: float) -> float:
    return 2.0 * q * math.log(0.5 * (1.0 - math.exp(-beta / (4.0 * q))))


def solve_lower_bound(beta: float, eps_prime: float, alpha: float = 1.0, tol: float = 1e-9) -> float:
    """Bisection solution of the query-floor equation (residual <= tol)."""
    return lower_bound_query(beta, eps_prime, alpha, tol).q_tilde


def lower_bound_query(beta: float, eps_prime: float, alpha: float = 1.0, tol: float = 1e-9) -> LowerBoundQuery:
    if beta <= 0:
        raise ValueError("beta must be positive")
    if not (0 < eps_prime < alpha / 2.0):
        raise ValueError("need 0 < eps_prime < alpha / 2")
    rhs = math.log(2.0 * eps_prime / alpha)
    lo = 1e-6
    hi = max(1.0, beta)
    while _log_lhs(beta, hi) > rhs:
        lo, hi = hi, 2.0 * hi
        if hi > 1e18:
            raise RuntimeError("bracket expansion failed")
    while _log_lhs(beta, lo) < rhs:
        lo *= 0.5
        if lo < 1e-300:
            raise RuntimeError("bracket expansion failed near zero")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _log_lhs(beta, mid) > rhs:
            lo = mid
        else:
            hi = mid
        resid = abs(math.exp(_log_lhs(beta, mid)) - 2.0 * eps_prime / alpha)
        if resid <= tol and (hi - lo) <= 1e-14 * max(1.0, hi):
            break
    mid = 0.5 * (lo + hi)
    resid = abs(math.exp(_log_lhs(beta, mid)) - 2.0 * eps_prime / alpha)
    return LowerBoundQuery(beta, eps_prime, alpha, mid, resid)


def optimality_gap(beta: float, eps_prime: float) -> float:
    """Ratio of the even-rounded upper bound to the query floor (alpha = 1)."""
    q_up = fa.round_queries(fa.q1_bound(beta, eps_prime))
    q_low = solve_lower_bound(beta, eps_prime, 1.0)
    return q_up / q_low


def gap_grid(betas, eps_primes) -> list[dict]:
    """Tabulates floor, upper bound, and their ratio over a parameter grid."""
    rows = []
    for eps in np.atleast_1d(eps_primes):
        for beta in np.atleast_1d(betas):
            lb = lower_bound_query(float(beta), float(eps))
            q_up = fa.round_queries(fa.q1_bound(float(beta), float(eps)))
            rows.append(
                {
                    "beta": float(beta),
                    "eps": float(eps),
                    "alpha": 1.0,
                    "q_tilde": lb.q_tilde,
                    "q1": q_up,
                    "ratio": q_up / lb.q_tilde,
                }
            )
    return rows
