"""Single-qubit pulse sequences realizing Chebyshev and Fourier targets.

Method 1 interleaves the iterate e^{i theta X} with Z rotations,

    R(theta, phi) = e^{i theta X} e^{i phi Z},
    seq(theta, phis) = e^{i phi_{q+1} Z} R(-theta, phi_q) ... R(-theta, phi_2) R(theta, phi_1),

whose (0,0) entry is a complex even polynomial B(cos theta) of degree <= q.
Given a real target curve sum_k b_k cos(2 k theta) bounded by one, the
completion step finds the full SU(2)-compatible pair (B, D) with
|B(x)|^2 + (1-x^2) |D(x)|^2 = 1 by spectral factorization of 1 - target^2 on
the unit circle (root pairing), and the angle extraction strips one rotation
per step, lowering the polynomial degree by exactly one each time.

Method 2 interleaves e^{i omega x Z} iterates with generic SU(2) pulses and
realizes trigonometric targets; its angles are found numerically (multi-start
least squares), which is a faithful stand-in for the constructive recipe and
is validated by round-trip evaluation.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .funcapprox import ChebyshevSeries, FourierSeries

COMPLETION_GRID = 8192
UNIT_CIRCLE_TOL = 1e-6


@dataclass(frozen=True)
class PolyPair:
    """Complex polynomial pair (B, D) with |B|^2 + (1-x^2) |D|^2 = 1 on [-1,1].

    B is stored by first-kind Chebyshev coefficients (B = sum_m B[m] T_m, even
    entries populated) and D by second-kind coefficients (D = sum_k D[k] U_k,
    odd entries populated), which keeps high degrees well conditioned.
    """

    B: np.ndarray
    D: np.ndarray
    residual: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "B", np.asarray(self.B, dtype=np.complex128))
        object.__setattr__(self, "D", np.asarray(self.D, dtype=np.complex128))

    @property
    def degree_b(self) -> int:
        nz = np.nonzero(np.abs(self.B) > 0)[0]
        return int(nz[-1]) if len(nz) else 0

    @property
    def degree_d(self) -> int:
        nz = np.nonzero(np.abs(self.D) > 0)[0]
        return int(nz[-1]) + 1 if len(nz) else -1

    def eval_b(self, x: np.ndarray) -> np.ndarray:
        from numpy.polynomial import chebyshev as C

        return C.chebval(np.asarray(x, dtype=float), self.B)

    def eval_sin_d(self, thetas: np.ndarray) -> np.ndarray:
        """sin(theta) D(cos theta), evaluated through sin((k+1) theta)."""
        thetas = np.asarray(thetas, dtype=float)
        out = np.zeros(len(thetas), dtype=np.complex128)
        for k, coef in enumerate(self.D):
            if coef != 0:
                out += coef * np.sin((k + 1) * thetas)
        return out

    def unitarity_residual(self, n_grid: int = COMPLETION_GRID) -> float:
        thetas = np.linspace(0.0, math.pi, n_grid)
        bb = self.eval_b(np.cos(thetas))
        sd = self.eval_sin_d(thetas)
        return float(np.max(np.abs(np.abs(bb) ** 2 + np.abs(sd) ** 2 - 1.0)))


@dataclass(frozen=True)
class PulseSeq1:
    """Z-rotation angles for method 1; length q+1 with q even."""

    phis: np.ndarray
    target: ChebyshevSeries | None = None
    residual: float = float("nan")
    step_residuals: tuple = field(default=(), compare=False)

    def __post_init__(self):
        p = np.asarray(self.phis, dtype=float)
        object.__setattr__(self, "phis", p)
        p.setflags(write=False)
        if len(p) % 2 != 1:
            raise ValueError("phis must have odd length q+1 with q even")

    @property
    def q(self) -> int:
        return len(self.phis) - 1

    def to_dict(self) -> dict:
        ref = None
        if self.target is not None:
            ref = {"kind": "chebyshev", "beta": self.target.beta, "lambda_min": self.target.lambda_min}
        return {"method": 1, "q": self.q, "phis": self.phis.tolist(),
                "target_ref": ref, "residual": self.residual}


@dataclass(frozen=True)
class PulseSeq2:
    """Iterate frequencies and SU(2) pulse parameters for method 2."""

    omegas: np.ndarray
    xis: np.ndarray
    target: FourierSeries | None = None
    residual: float = float("nan")
    converged: bool = True

    def __post_init__(self):
        om = np.asarray(self.omegas, dtype=float)
        xi = np.asarray(self.xis, dtype=float).reshape(len(om), 4)
        object.__setattr__(self, "omegas", om)
        object.__setattr__(self, "xis", xi)
        om.setflags(write=False)
        xi.setflags(write=False)

    @property
    def q(self) -> int:
        return len(self.omegas) - 1

    def to_dict(self) -> dict:
        ref = None
        if self.target is not None:
            ref = {"kind": "fourier", "beta": self.target.beta, "gamma": self.target.gamma,
                   "t": self.target.t}
        return {
            "method": 2,
            "q": self.q,
            "omegas": self.omegas.tolist(),
            "xis": self.xis.tolist(),
            "target_ref": ref,
            "residual": self.residual,
        }


def canonical_omegas(q: int) -> np.ndarray:
    """omega_0 = 0 and omega_k = (-1)^k / 2 for the q iterate gates."""
    om = np.zeros(q + 1)
    om[1:] = 0.5 * (-1.0) ** np.arange(1, q + 1)
    return om


# ---------------------------------------------------------------------------
# sequence evaluation
# ---------------------------------------------------------------------------


def _rot1(theta: float, phi: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    ex = np.array([[c, 1j * s], [1j * s, c]], dtype=np.complex128)
    ez = np.array([[cmath.exp(1j * phi), 0.0], [0.0, cmath.exp(-1j * phi)]])
    return ex @ ez


def eval_sequence1(phis: np.ndarray, theta: float) -> np.ndarray:
    """2x2 unitary of the method-1 sequence at signal angle theta."""
    phis = np.asarray(phis, dtype=float)
    q = len(phis) - 1
    out = np.array(
        [[cmath.exp(1j * phis[q]), 0.0], [0.0, cmath.exp(-1j * phis[q])]], dtype=np.complex128
    )
    for k in range(q, 0, -1):
        sign = 1.0 if k % 2 == 1 else -1.0
        out = out @ _rot1(sign * theta, phis[k - 1])
    return out


def eval_sequence1_many(phis: np.ndarray, thetas: np.ndarray) -> np.ndarray:
    """Vectorized eval_sequence1; returns an (n, 2, 2) array."""
    phis = np.asarray(phis, dtype=float)
    thetas = np.asarray(thetas, dtype=float)
    q = len(phis) - 1
    n = len(thetas)
    out = np.zeros((n, 2, 2), dtype=np.complex128)
    out[:, 0, 0] = cmath.exp(1j * phis[q])
    out[:, 1, 1] = cmath.exp(-1j * phis[q])
    c = np.cos(thetas)
    s = np.sin(thetas)
    for k in range(q, 0, -1):
        sign = 1.0 if k % 2 == 1 else -1.0
        gate = np.zeros((n, 2, 2), dtype=np.complex128)
        ep, em = cmath.exp(1j * phis[k - 1]), cmath.exp(-1j * phis[k - 1])
        gate[:, 0, 0] = c * ep
        gate[:, 0, 1] = 1j * sign * s * em
        gate[:, 1, 0] = 1j * sign * s * ep
        gate[:, 1, 1] = c * em
        out = out @ gate
    return out


def _rz(a):
    return np.array([[cmath.exp(1j * a), 0.0], [0.0, cmath.exp(-1j * a)]], dtype=np.complex128)


def _ry(b):
    c, s = math.cos(b), math.sin(b)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def r2_gate(x: float, omega: float, zeta: float, eta: float, phi: float, kappa: float) -> np.ndarray:
    return _rz(0.5 * (zeta + eta)) @ _ry(phi) @ _rz(0.5 * (zeta - eta)) @ _rz(omega * x) @ _ry(kappa)


def eval_sequence2(omegas: np.ndarray, xis: np.ndarray, x: float) -> np.ndarray:
    """2x2 unitary of the method-2 sequence at signal value x."""
    omegas = np.asarray(omegas, dtype=float)
    xis = np.asarray(xis, dtype=float).reshape(len(omegas), 4)
    out = np.eye(2, dtype=np.complex128)
    for k in range(len(omegas)):
        out = r2_gate(x, omegas[k], *xis[k]) @ out
    return out


def eval_sequence2_block_many(omegas: np.ndarray, xis: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """<0|sequence|0> over an array of signal values."""
    omegas = np.asarray(omegas, dtype=float)
    xis = np.asarray(xis, dtype=float).reshape(len(omegas), 4)
    xs = np.asarray(xs, dtype=float)
    n = len(xs)
    out = np.broadcast_to(np.eye(2, dtype=np.complex128), (n, 2, 2)).copy()
    for k in range(len(omegas)):
        zeta, eta, phi, kappa = xis[k]
        fixed_l = _rz(0.5 * (zeta + eta)) @ _ry(phi) @ _rz(0.5 * (zeta - eta))
        ph = np.exp(1j * omegas[k] * xs)
        iterate = np.zeros((n, 2, 2), dtype=np.complex128)
        iterate[:, 0, 0] = ph
        iterate[:, 1, 1] = ph.conj()
        out = (fixed_l @ (iterate @ _ry(kappa))) @ out
    return out[:, 0, 0]


# ---------------------------------------------------------------------------
# achievability and completion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AchievabilityReport:
    ok: bool
    max_value: float
    argmax_theta: float
    parity_ok: bool
    degree_b: int
    degree_d: int
    message: str = ""


def verify_achievability(b_coeffs, d_coeffs, n_grid: int = COMPLETION_GRID) -> AchievabilityReport:
    """Grid check of target^2 + sin^2(theta) d^2 <= 1 plus form diagnostics.

    Inputs are the cos(2 k theta) coefficients of the target curve and the
    sin(2 k theta) coefficients of the secondary curve (d_0 is unused and
    must be ~0 if supplied with leading entry).
    """
    b = np.asarray(b_coeffs, dtype=float)
    d = np.asarray(d_coeffs, dtype=float) if len(np.atleast_1d(d_coeffs)) else np.zeros(1)
    thetas = np.linspace(0.0, math.pi, n_grid)
    bb = _cos_series(b, thetas)
    dd = _sin_series(d, thetas)
    val = bb**2 + dd**2
    i = int(np.argmax(val))
    mx = float(val[i])
    ok = mx <= 1.0 + 1e-12
    msg = "" if ok else f"target exceeds unit bound at theta={thetas[i]:.6f} (value {mx:.6e})"
    return AchievabilityReport(ok, mx, float(thetas[i]), True, 2 * (len(b) - 1), max(2 * (len(d) - 1) - 1, 0), msg)


def _cos_series(b: np.ndarray, thetas: np.ndarray) -> np.ndarray:
    k = np.arange(len(b))
    return np.cos(np.outer(thetas, 2 * k)) @ b


def _sin_series(d: np.ndarray, thetas: np.ndarray) -> np.ndarray:
    k = np.arange(len(d))
    return np.sin(np.outer(thetas, 2 * k)) @ d


def _laurent_roots(p_desc: np.ndarray, use_mpmath: bool):
    if not use_mpmath:
        return np.roots(p_desc)
    import mpmath as mp

    with mp.workdps(60):
        rts = mp.polyroots([mp.mpc(c) for c in p_desc], maxsteps=200, extraprec=200)
    return np.array([complex(r) for r in rts])


def _pair_and_keep_roots(roots: np.ndarray) -> np.ndarray:
    """Match each root with its circle-inversion partner, keep the inner one."""
    remaining = list(range(len(roots)))
    kept = []
    order = sorted(remaining, key=lambda i: abs(roots[i]))
    used = set()
    for i in order:
        if i in used:
            continue
        target = 1.0 / np.conj(roots[i]) if roots[i] != 0 else np.inf
        best_j, best_d = None, np.inf
        for j in remaining:
            if j in used or j == i:
                continue
            d = abs(roots[j] - target)
            if d < best_d:
                best_j, best_d = j, d
        if best_j is None:
            kept.append(roots[i])
            used.add(i)
            continue
        used.add(i)
        used.add(best_j)
        inner = roots[i] if abs(roots[i]) <= abs(roots[best_j]) else roots[best_j]
        kept.append(inner)
    return np.array(kept)


def complete_polynomials(b_coeffs, grid: int = COMPLETION_GRID) -> PolyPair:
    """Complete a real even target into a unitary polynomial pair.

    `b_coeffs` are the cos(2 k theta) coefficients of the target curve, i.e.
    the T_k coefficients of the Chebyshev series after the half-angle lift.
    The imaginary part of B and the (purely imaginary) D are produced by
    spectral factorization of 1 - target(x)^2 over the unit circle, pairing
    each polynomial root with its inversion partner and keeping the inner
    one.  Raises if the target exceeds the unit bound; the recommended fix is
    dividing the coefficients by (1 + truncation error).
    """
    b = np.asarray(b_coeffs, dtype=float)
    rep = verify_achievability(b, np.zeros(1), n_grid=grid)
    if not rep.ok:
        raise ValueError(f"normalization violation: {rep.message}; rescale the target first")
    b = np.array(b, dtype=float)
    scale = max(np.max(np.abs(b)), 1.0)
    nz = np.nonzero(np.abs(b) > 1e-14 * scale)[0]
    n_eff = int(nz[-1]) if len(nz) else 0
    b = b[: n_eff + 1]
    q = 2 * n_eff

    # lift to x = cos(theta): target(x) = sum b_k T_{2k}(x)
    bt = np.zeros(q + 1)
    bt[::2] = b
    from numpy.polynomial import chebyshev as C

    a_t = -C.chebmul(bt, bt)
    a_t[0] += 1.0
    if len(a_t) < 2 * q + 1:
        a_t = np.concatenate([a_t, np.zeros(2 * q + 1 - len(a_t))])
    alpha = a_t[::2][: q + 1]  # cos(j * 2 theta) coefficients, j = 0..q

    if q == 0:
        g0 = math.sqrt(max(1.0 - b[0] ** 2, 0.0))
        return PolyPair(np.array([b[0] + 1j * g0]), np.zeros(0), 0.0)

    p = np.zeros(2 * q + 1)
    p[q] = alpha[0]
    for j in range(1, q + 1):
        p[q + j] = alpha[j] / 2.0
        p[q - j] = alpha[j] / 2.0
    pair = _complete_from_laurent(b, alpha, p, q, use_mpmath=False)
    if pair.residual > UNIT_CIRCLE_TOL:
        pair = _complete_from_laurent(b, alpha, p, q, use_mpmath=True)
    if pair.residual > UNIT_CIRCLE_TOL:
        raise ArithmeticError(
            f"root-finding residual {pair.residual:.3e} exceeds {UNIT_CIRCLE_TOL}; "
            "consider rescaling the target by 1/(1+eps_tr)"
        )
    return pair


def _complete_from_laurent(b, alpha, p, q, use_mpmath: bool) -> PolyPair:
    while len(p) > 1 and abs(p[-1]) < 1e-300:
        p = p[:-1]
    roots = _laurent_roots(p[::-1], use_mpmath)
    kept = _pair_and_keep_roots(roots)
    coeffs_desc = np.poly(kept) if len(kept) else np.array([1.0])
    c = np.real(coeffs_desc[::-1]).astype(float)

    # scale so that |c(w)|^2 matches the factored trig polynomial on the circle
    phis = np.linspace(0.0, 2.0 * math.pi, 4096, endpoint=False)
    w = np.exp(1j * phis)
    cal_a = np.cos(np.outer(phis, np.arange(q + 1))) @ alpha
    cvals = np.polyval(c[::-1], w)
    num = float(np.sqrt(max(np.max(cal_a), 0.0)))
    i_max = int(np.argmax(cal_a))
    denom = abs(cvals[i_max])
    kscale = num / denom if denom > 0 else 0.0
    c = c * kscale

    half = q // 2
    # pad c to full laurent length and center at index half
    if len(c) < q + 1:
        c = np.concatenate([c, np.zeros(q + 1 - len(c))])
    g = np.zeros(half + 1)
    h = np.zeros(half + 1)
    g[0] = c[half]
    for j in range(1, half + 1):
        g[j] = c[half + j] + c[half - j]
        h[j] = c[half + j] - c[half - j]

    # B = target + i*G over T_{2j}(x); D = i * sum_j h_j U_{2j-1}(x)
    bt_c = np.zeros(q + 1, dtype=np.complex128)
    bt_c[::2] = (b if len(b) == half + 1 else np.pad(b, (0, half + 1 - len(b)))) + 1j * g
    du_c = np.zeros(q, dtype=np.complex128) if half else np.zeros(0, dtype=np.complex128)
    for j in range(1, half + 1):
        du_c[2 * j - 1] = 1j * h[j]
    pair = PolyPair(bt_c, du_c)
    return PolyPair(bt_c, du_c, pair.unitarity_residual())


# ---------------------------------------------------------------------------
# method-1 angle extraction (degree reduction)
# ---------------------------------------------------------------------------


def _mul_cos(arr: np.ndarray) -> np.ndarray:
    out = np.zeros(len(arr) + 2, dtype=np.complex128)
    out[2:] += 0.5 * arr
    out[:-2] += 0.5 * arr
    return out


def _mul_sin(arr: np.ndarray) -> np.ndarray:
    out = np.zeros(len(arr) + 2, dtype=np.complex128)
    out[2:] += arr / 2j
    out[:-2] -= arr / 2j
    return out


def _pair_to_laurent(pair: PolyPair, l: int) -> tuple[np.ndarray, np.ndarray]:
    """Frequency-space representation: P(th) = B(cos th), Q(th) = sin(th) D(cos th)."""
    p = np.zeros(2 * l + 1, dtype=np.complex128)
    qq = np.zeros(2 * l + 1, dtype=np.complex128)
    for m, coef in enumerate(pair.B):
        if m > l or coef == 0:
            continue
        if m == 0:
            p[l] += coef
        else:
            p[l + m] += 0.5 * coef
            p[l - m] += 0.5 * coef
    for k, coef in enumerate(pair.D):
        n = k + 1
        if n > l or coef == 0:
            continue
        qq[l + n] += coef / 2j
        qq[l - n] -= coef / 2j
    return p, qq


def angles_method1(pair: PolyPair, target: ChebyshevSeries | None = None, q: int | None = None) -> PulseSeq1:
    """Strip one rotation per step from the pair to read off the angles.

    Works on the frequency-space form of the entries (well conditioned at any
    degree): each step the leading-frequency ratio fixes e^{2 i phi}, the top
    and bottom frequencies cancel, and the band shrinks by one.  The recorded
    per-step residuals are the magnitudes of the coefficients that should
    have cancelled.  Trailing angles are zero when the effective degree is
    below the requested sequence length.
    """
    l = pair.degree_b
    if l % 2 != 0:
        raise ValueError("B must be an even polynomial")
    p, qq = _pair_to_laurent(pair, l)
    scale = max(float(np.max(np.abs(p))), 1e-30)
    while l > 0 and max(abs(p[0]), abs(p[-1]), abs(qq[0]), abs(qq[-1])) < 1e-12 * scale:
        p = p[2:-2]
        qq = qq[2:-2]
        l -= 2
    phis = []
    step_residuals = []
    for step in range(1, l + 1):
        p_top, q_top = p[-1], qq[-1]
        if abs(q_top) == 0.0:
            raise ArithmeticError("degenerate leading coefficient: Q vanished before P")
        ratio = (-1j if step % 2 == 1 else 1j) * p_top / q_top
        if abs(abs(ratio) - 1.0) > UNIT_CIRCLE_TOL:
            raise ArithmeticError(
                f"leading-coefficient ratio off the unit circle by {abs(abs(ratio)-1.0):.3e} at step {step}"
            )
        e2 = ratio / abs(ratio)
        phi = cmath.phase(e2) / 2.0
        phis.append(phi)
        em = cmath.exp(-1j * phi)
        sign = 1.0 if step % 2 == 1 else -1.0
        new_p = em * (_mul_cos(p) + sign * e2 * _mul_sin(qq))
        new_q = em * (-sign * _mul_sin(p) + e2 * _mul_cos(qq))
        step_residuals.append(
            max(abs(new_p[0]), abs(new_p[-1]), abs(new_q[0]), abs(new_q[-1]),
                abs(new_p[1]), abs(new_p[-2]), abs(new_q[1]), abs(new_q[-2]))
        )
        p = new_p[2:-2]
        qq = new_q[2:-2]
    final = complex(p[0]) if len(p) else 1.0 + 0j
    phis.append(cmath.phase(final))
    norm_defect = abs(abs(final) - 1.0)
    q_out = q if q is not None else l
    if q_out < l or q_out % 2 != 0:
        raise ValueError(f"requested length q={q_out} below effective degree {l} or odd")
    full = np.zeros(q_out + 1)
    full[: len(phis)] = phis
    seq = PulseSeq1(full, target, float("nan"), tuple(step_residuals))
    residual = _roundtrip_residual(seq, pair)
    return PulseSeq1(full, target, max(residual, norm_defect), tuple(step_residuals))


def _roundtrip_residual(seq: PulseSeq1, pair: PolyPair, n_grid: int = 512) -> float:
    thetas = np.linspace(0.0, math.pi, n_grid)
    mats = eval_sequence1_many(seq.phis, thetas)
    b_target = pair.eval_b(np.cos(thetas))
    return float(np.max(np.abs(mats[:, 0, 0] - b_target)))


def realized_curve(phis: np.ndarray, thetas: np.ndarray) -> np.ndarray:
    """Re <0|seq(theta)|0>, the realized version of the target cosine series."""
    return np.real(eval_sequence1_many(phis, thetas)[:, 0, 0])


# ---------------------------------------------------------------------------
# method-2 angle fitting
# ---------------------------------------------------------------------------


_R90 = np.array([[0.0, -1.0], [1.0, 0.0]])  # d/dt of the y rotation
_ZP = np.diag([1.0, -1.0]).astype(np.complex128)


def _gate_constants(xis: np.ndarray):
    """Per-gate x-independent factors A, A_phi', K and composites."""
    parts = []
    for zeta, eta, phi, kappa in xis:
        rza = _rz(0.5 * (zeta + eta))
        rzb = _rz(0.5 * (zeta - eta))
        ry = _ry(phi)
        A = rza @ ry @ rzb
        A_phi = rza @ _R90 @ ry @ rzb
        parts.append((A, A_phi, _ry(kappa)))
    return parts


def sequence2_objective_grad(xi_flat: np.ndarray, omegas: np.ndarray, xs: np.ndarray, want: np.ndarray):
    """Sum of squared block residuals and its gradient over all pulse angles.

    One forward pass stores prefix states, one backward pass the suffix rows;
    each angle derivative is then a 2x2 insertion at its own gate (layerwise
    backpropagation through the matrix product).
    """
    q1 = len(omegas)
    xis = np.asarray(xi_flat, dtype=float).reshape(q1, 4)
    n = len(xs)
    parts = _gate_constants(xis)
    phases = np.exp(1j * np.outer(omegas, xs))  # (q1, n)

    gates = np.empty((q1, n, 2, 2), dtype=np.complex128)
    lefts = np.empty_like(gates)  # A_k Z(w x), needed for zeta/eta/kappa
    for k, (A, _, K) in enumerate(parts):
        zk = np.zeros((n, 2, 2), dtype=np.complex128)
        zk[:, 0, 0] = phases[k]
        zk[:, 1, 1] = phases[k].conj()
        L = A @ zk
        lefts[k] = L
        gates[k] = L @ K

    prefix = np.empty((q1 + 1, n, 2), dtype=np.complex128)  # G_{k-1}..G_0 |0>
    prefix[0] = np.array([1.0, 0.0])
    for k in range(q1):
        prefix[k + 1] = (gates[k] @ prefix[k][:, :, None])[:, :, 0]
    suffix = np.empty((q1 + 1, n, 2), dtype=np.complex128)  # <0| G_q..G_{k+1}
    suffix[q1] = np.array([1.0, 0.0])
    for k in range(q1 - 1, -1, -1):
        suffix[k] = (suffix[k + 1][:, None, :] @ gates[k])[:, 0, :]

    block = prefix[q1][:, 0]
    resid = block - want
    value = float(np.sum(np.abs(resid) ** 2))

    grad = np.zeros((q1, 4))
    for k, (A, A_phi, K) in enumerate(parts):
        u = suffix[k + 1]  # row vectors
        w = prefix[k]  # column vectors
        zk = np.zeros((n, 2, 2), dtype=np.complex128)
        zk[:, 0, 0] = phases[k]
        zk[:, 1, 1] = phases[k].conj()
        zg = _ZP @ gates[k]
        lzk = lefts[k] @ (_ZP @ K)
        d_zeta = 0.5j * (zg + lzk)
        d_eta = 0.5j * (zg - lzk)
        d_phi = (A_phi @ zk) @ K
        d_kappa = lefts[k] @ (_R90 @ K)
        rbar = np.conj(resid)
        for col, dG in enumerate((d_zeta, d_eta, d_phi, d_kappa)):
            db = (u * (dG @ w[:, :, None])[:, :, 0]).sum(axis=1)
            grad[k, col] = 2.0 * float(np.sum(np.real(rbar * db)))
    return value, grad.ravel()


def angles_method2(
    target: FourierSeries,
    tol: float = 1e-6,
    restarts: int = 6,
    seed: int = 7,
    n_grid: int | None = None,
    maxiter: int = 1200,
) -> PulseSeq2:
    """Fit the SU(2) pulse parameters reproducing the target series.

    Multi-start quasi-Newton least squares (analytic gradient) over the
    4(q+1) pulse angles on a periodic grid, stopping early once the max
    pointwise error dips below tol; returns the best fit with a convergence
    flag (False when the requested tolerance was not reached).  Practical
    for moderate q; the simulators evaluate the series directly when pulses
    are not needed.
    """
    from scipy.optimize import minimize

    q = target.q
    omegas = canonical_omegas(q)
    if n_grid is None:
        n_grid = max(256, 4 * (q + 1))
    xs = np.linspace(-math.pi, math.pi, n_grid, endpoint=False)
    want = target.eval(xs)
    bound = float(np.max(np.abs(want)))
    if bound > 1.0 + 1e-9:
        raise ValueError(f"target exceeds unit bound ({bound}); not realizable")
    # sum-of-squares level at which the max error is surely below tol
    stop_value = tol * tol

    rng = np.random.default_rng(seed)
    best_xi, best_err = None, np.inf
    for trial in range(restarts):
        if trial == 0:
            x0 = np.zeros(4 * (q + 1))
            x0[2::4] = 1e-2  # break the gradient-zero symmetry at the origin
        else:
            x0 = rng.uniform(-math.pi, math.pi, size=4 * (q + 1))
        state = {"x": x0, "val": np.inf}

        def fun(v):
            val, grad = sequence2_objective_grad(v, omegas, xs, want)
            if val < state["val"]:
                state["val"], state["x"] = val, v.copy()
            return val, grad

        def stop_early(_):
            if state["val"] <= stop_value:
                raise StopIteration

        try:
            minimize(
                fun, x0, jac=True, method="L-BFGS-B", callback=stop_early,
                options={"maxiter": maxiter, "ftol": 1e-16, "gtol": 1e-13},
            )
        except StopIteration:
            pass
        err = _max_fit_error(omegas, state["x"], xs, want)
        if err < best_err:
            best_err, best_xi = err, state["x"]
        if best_err <= tol:
            break
    return PulseSeq2(omegas, best_xi, target, best_err, best_err <= tol)


def _max_fit_error(omegas, xi_flat, xs, want) -> float:
    got = eval_sequence2_block_many(omegas, xi_flat, xs)
    return float(np.max(np.abs(got - want)))
