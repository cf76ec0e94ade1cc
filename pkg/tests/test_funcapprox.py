import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from fragqite import funcapprox as fa


# ---------------------------------------------------------------------------
# independent oracles
# ---------------------------------------------------------------------------


def bessel_series_oracle(k: int, x: float, terms: int = 60) -> float:
    """Ascending power series sum_m (x/2)^(2m+k) / (m! (m+k)!)."""
    total = 0.0
    for m in range(terms):
        total += (x / 2.0) ** (2 * m + k) / (math.factorial(m) * math.factorial(m + k))
    return total


def quadrature_coeff_oracle(f, k: int) -> float:
    """Chebyshev projection (2 - delta_k0)/pi * int f T_k / sqrt(1-x^2)."""
    val, _ = quad(lambda x: f(x) * np.cos(k * np.arccos(x)) / np.sqrt(1.0 - x**2),
                  -1.0, 1.0, limit=400)
    return (1.0 if k == 0 else 2.0) * val / math.pi


def naive_cheb_eval(coeffs, lam):
    lam = np.asarray(lam, dtype=float)
    return sum(c * np.cos(k * np.arccos(np.clip(lam, -1, 1))) for k, c in enumerate(coeffs))


# ---------------------------------------------------------------------------
# Bessel / Jacobi-Anger coefficients
# ---------------------------------------------------------------------------


def test_bessel_against_series_oracle():
    for k, x in [(0, 0.0), (0, 1.0), (1, 1.0), (2, 3.0), (5, 10.0), (0, 20.0)]:
        assert fa.bessel_i(k, x) == pytest.approx(bessel_series_oracle(k, x), rel=1e-12)


def test_bessel_spot_values():
    assert fa.bessel_i(0, 0.0) == pytest.approx(1.0)
    assert fa.bessel_i(1, 1.0) == pytest.approx(0.565159, abs=1e-6)
    assert fa.bessel_i(0, 1.0) == pytest.approx(1.266066, abs=1e-6)


def test_bessel_rejects_overflow_and_bad_args():
    with pytest.raises(OverflowError):
        fa.bessel_i(0, 701.0)
    with pytest.raises(ValueError):
        fa.bessel_i(-1, 1.0)
    with pytest.raises(ValueError):
        fa.bessel_i(0, -1.0)


def test_jacobi_anger_zero_beta():
    s = fa.jacobi_anger_coeffs(0.0, -1.0, 6)
    assert np.allclose(s.coeffs, [1, 0, 0, 0])
    assert s.certified_error == 0.0


def test_jacobi_anger_values():
    s = fa.jacobi_anger_coeffs(1.0, 0.0, 8)
    expect = [
        bessel_series_oracle(0, 1.0),
        -2 * bessel_series_oracle(1, 1.0),
        2 * bessel_series_oracle(2, 1.0),
        -2 * bessel_series_oracle(3, 1.0),
        2 * bessel_series_oracle(4, 1.0),
    ]
    assert np.allclose(s.coeffs, expect, rtol=1e-12)
    assert s.coeffs[0] == pytest.approx(1.266066, abs=1e-6)
    assert s.coeffs[1] == pytest.approx(-1.130318, abs=1e-6)
    assert s.coeffs[2] == pytest.approx(0.271495, abs=1e-6)


def test_jacobi_anger_lambda_min_scaling():
    base = fa.jacobi_anger_coeffs(1.5, 0.0, 8)
    shifted = fa.jacobi_anger_coeffs(1.5, -1.0, 8)
    assert np.allclose(shifted.coeffs, base.coeffs * math.exp(-1.5), rtol=1e-12)


def test_jacobi_anger_rejects_odd_q():
    with pytest.raises(ValueError):
        fa.jacobi_anger_coeffs(1.0, 0.0, 7)


def test_jacobi_anger_matches_quadrature_oracle():
    beta = 2.0
    s = fa.jacobi_anger_coeffs(beta, 0.0, 12)
    for k in range(4):
        assert s.coeffs[k] == pytest.approx(
            quadrature_coeff_oracle(lambda x: np.exp(-beta * x), k), rel=1e-10
        )


# ---------------------------------------------------------------------------
# truncation orders and query bounds
# ---------------------------------------------------------------------------


def test_cheb_truncation_order_examples():
    # direct search: order 4 gives 1/1920 < 1e-3, order 3 gives 1/192
    assert fa.cheb_truncation_order(1.0, 1e-3) == 8
    assert fa.cheb_truncation_order(0.0, 1e-3) == 0


def test_cheb_truncation_order_bound_holds():
    for beta, eps in [(0.5, 1e-2), (2.0, 1e-5), (7.0, 1e-3)]:
        q = fa.cheb_truncation_order(beta, eps)
        n = q // 2
        bound = beta ** (n + 1) / (2.0**n * math.factorial(n + 1))
        assert bound < eps
        if n > 0:
            worse = beta**n / (2.0 ** (n - 1) * math.factorial(n))
            assert worse >= eps


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 30.0), st.floats(0.01, 15.0), st.floats(1e-8, 0.5))
def test_cheb_truncation_order_monotone(beta, extra, eps):
    assert fa.cheb_truncation_order(beta + extra, eps) >= fa.cheb_truncation_order(beta, eps)


def test_q1_bound_value():
    b = fa.q1_bound(10.0, 1e-3)
    log_inv = math.log(1e3)
    expect = 2 * (math.e * 10 / 2 + log_inv / math.log(math.e + 2 * log_inv / (math.e * 10)))
    assert b == pytest.approx(expect, rel=1e-14)
    assert b == pytest.approx(38.98, abs=0.05)
    assert fa.round_queries(b) == 40


def test_q1_bound_small_beta_limit():
    # tends to zero as beta -> 0 (logarithmically slowly)
    vals = [fa.q1_bound(b, 1e-3) for b in (1e-3, 1e-9, 1e-50, 1e-300)]
    assert all(v > w for v, w in zip(vals, vals[1:]))
    assert vals[-1] < 0.05


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 50.0), st.floats(1e-6, 0.3))
def test_q1_bound_monotone_in_eps(beta, eps):
    assert fa.q1_bound(beta, eps / 10.0) > fa.q1_bound(beta, eps)


def test_round_queries():
    assert fa.round_queries(0.0) == 0
    assert fa.round_queries(0.3) == 2
    assert fa.round_queries(38.97) == 40
    assert fa.round_queries(40.0) == 40


# ---------------------------------------------------------------------------
# generic Chebyshev projection
# ---------------------------------------------------------------------------


def test_generic_cheb_t3():
    s = fa.generic_cheb_coeffs(lambda x: np.cos(3 * np.arccos(x)), 6)
    assert np.allclose(s.coeffs, [0, 0, 0, 1], atol=1e-13)


def test_generic_cheb_constant():
    s = fa.generic_cheb_coeffs(lambda x: 0.7 * np.ones_like(x), 4)
    assert np.allclose(s.coeffs, [0.7, 0, 0], atol=1e-14)


def test_generic_cheb_matches_jacobi_anger():
    s = fa.generic_cheb_coeffs(lambda x: np.exp(-x), 8)
    ja = fa.jacobi_anger_coeffs(1.0, 0.0, 8)
    assert np.allclose(s.coeffs, ja.coeffs, atol=1e-10)


def test_generic_cheb_rejects_nonfinite():
    with pytest.raises(ValueError):
        fa.generic_cheb_coeffs(lambda x: np.full_like(x, np.nan), 4)


def test_cheb_error_bound_values():
    assert fa.cheb_error_bound(0.0, 10) == 0.0
    assert fa.cheb_error_bound(3.0, 0) == pytest.approx(3.0)
    assert fa.cheb_error_bound(2.0, 4) == pytest.approx(2.0 / (4.0 * 6.0))


def test_clenshaw_matches_naive():
    rng = np.random.default_rng(0)
    coeffs = rng.normal(size=9)
    lam = rng.uniform(-1, 1, size=1000)
    series = fa.ChebyshevSeries(coeffs)
    assert np.max(np.abs(series.eval(lam) - naive_cheb_eval(coeffs, lam))) < 1e-12


def test_truncation_error_within_bound_on_grid():
    lam = np.linspace(-1, 1, 10_000)
    for beta, eps in [(0.5, 1e-2), (1.0, 1e-3), (3.0, 1e-4)]:
        q = fa.cheb_truncation_order(beta, eps)
        s = fa.jacobi_anger_coeffs(beta, -1.0, q)
        err = np.max(np.abs(s.eval(lam) - np.exp(-beta * (lam + 1))))
        assert err <= s.certified_error <= eps


def test_series_bounded_within_certified_error():
    # the half-angle curve never leaves [-1-err, 1+err] for unit-ground targets
    thetas = np.linspace(0, np.pi, 10_000)
    for beta, q in [(0.5, 6), (1.0, 10), (5.0, 28)]:
        s = fa.jacobi_anger_coeffs(beta, -1.0, q)
        k = np.arange(len(s.coeffs))
        curve = np.cos(np.outer(thetas, 2 * k)) @ s.coeffs
        assert np.max(np.abs(curve)) <= 1.0 + s.certified_error


# ---------------------------------------------------------------------------
# subnormalization and Fourier route
# ---------------------------------------------------------------------------


def test_gamma_opt_values():
    assert fa.gamma_opt(2.0, "prob") == pytest.approx(math.sqrt(2) - 1, rel=1e-12)
    # direct evaluation of the optimizer formula with mu = 1/2
    assert fa.gamma_opt(2.0, "coh") == pytest.approx(math.sqrt(3) - 1, rel=1e-12)
    assert fa.gamma_opt(1e9, "prob") == pytest.approx(0.5, rel=1e-4)
    assert fa.gamma_opt(1e9, "coh") == pytest.approx(1.0, rel=1e-4)
    with pytest.raises(ValueError):
        fa.gamma_opt(1.0, "nope")
    with pytest.raises(ValueError):
        fa.gamma_opt(0.0, "prob")


def test_gamma_opt_near_optimal_cost():
    # sweep oracle: the closed form must sit within the first-order window
    for beta in (0.5, 2.0, 10.0):
        for mu, kind in [(1.0, "prob"), (0.5, "coh")]:
            norm_f = 0.3  # stand-in for the propagator norm on the input
            eps = 1e-3

            def cost(g):
                return (
                    math.exp(2 * mu * g)
                    / norm_f ** (2 * mu)
                    * (beta / g + 1.0)
                    * (math.log(8.0 / (norm_f * eps)) + g)
                )

            g_star = fa.gamma_opt(beta, kind)
            sweep = np.geomspace(g_star / 12, min(8 * g_star, 20.0), 200)
            best = min(cost(g) for g in sweep)
            rel_gap = (cost(g_star) - best) / best
            window = 1.0 / math.log(8.0 * math.exp(2 * g_star) / (norm_f * eps))
            assert rel_gap <= window


def test_q2_bound_values():
    v = fa.q2_bound(2.0, math.sqrt(2) - 1, 1e-3)
    assert v == pytest.approx(193.4, abs=0.1)
    assert fa.round_queries(v) == 194
    assert fa.q2_bound(0.0, 1.0, 1e-3) == pytest.approx(4 * math.log(4e3))
    assert fa.q2_bound(2.0, 2 * (math.sqrt(2) - 1), 1e-3) < v


def test_taylor_order_and_alpha():
    L, alpha, t = fa.taylor_order_and_alpha(0.0, -1.0, 0.5, 1e-3)
    assert (L, alpha) == (0, pytest.approx(math.exp(-0.5)))
    assert np.allclose(t.coeffs, [1.0])

    L, alpha, t = fa.taylor_order_and_alpha(1.0, -1.0, 1.0, 1e-3)
    assert alpha == pytest.approx(math.exp(-1.0))
    # independent remainder search
    want = 0
    while alpha / math.factorial(want + 1) > 1e-3 / 4:
        want += 1
    assert L == want
    ls = np.arange(L + 1)
    assert np.allclose(t.coeffs, np.exp(-1.0) * (-1.0) ** ls / [math.factorial(l) for l in ls])


def test_taylor_alpha_lambda_min_shift():
    _, alpha, _ = fa.taylor_order_and_alpha(2.0, -0.5, 0.3, 1e-3)
    assert alpha == pytest.approx(math.exp(-2.0 * 0.5 - 0.3), rel=1e-12)


def test_fourier_zero_beta():
    _, _, taylor = fa.taylor_order_and_alpha(0.0, -1.0, 0.7, 1e-3)
    s = fa.fourier_from_taylor(taylor, 0.0, 0.7, 1e-3)
    assert s.q == 0
    assert s.coeffs[0] == pytest.approx(math.exp(-0.7))
    assert s.certified_error == 0.0


def test_fourier_degree_formula():
    # gamma = beta gives delta = pi/4 and q = ceil(8 ln(4/eps)), even-rounded
    beta = gamma = 1.0
    _, _, taylor = fa.taylor_order_and_alpha(beta, -1.0, gamma, 1e-2)
    s = fa.fourier_from_taylor(taylor, beta, gamma, 1e-2)
    assert s.delta == pytest.approx(math.pi / 4)
    assert s.t == pytest.approx(math.pi / 4)
    assert s.q == fa.round_queries(8 * math.log(4 / 1e-2))


@pytest.mark.parametrize("beta,eps", [(0.5, 1e-2), (1.0, 1e-3)])
def test_fourier_certification(beta, eps):
    gamma = fa.gamma_opt(beta, "prob")
    _, alpha, taylor = fa.taylor_order_and_alpha(beta, -1.0, gamma, eps)
    s = fa.fourier_from_taylor(taylor, beta, gamma, eps)
    assert s.certified_error <= eps
    # grid-max oracle on a fresh grid
    xs = np.linspace(-s.t, s.t, 3333)
    target = alpha * np.exp(-beta * (xs / s.t + 1.0))
    assert np.max(np.abs(s.eval(xs) - target)) <= s.certified_error * 1.02 + 1e-12
    xs_full = np.linspace(-math.pi, math.pi, 4444)
    assert np.max(np.abs(s.eval(xs_full))) <= 1.0 + 1e-9


def test_fourier_eigenvalue_transfer():
    # series-level certification transfers to every eigenvalue in [-1, 1]
    beta, eps = 0.8, 1e-3
    gamma = fa.gamma_opt(beta, "prob")
    _, alpha, taylor = fa.taylor_order_and_alpha(beta, -1.0, gamma, eps)
    s = fa.fourier_from_taylor(taylor, beta, gamma, eps)
    lam = np.linspace(-1, 1, 1000)
    err = np.abs(s.eval(s.t * lam) - alpha * np.exp(-beta * (lam + 1)))
    assert np.max(err) <= s.certified_error * 1.02 + 1e-12
