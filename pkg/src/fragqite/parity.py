"""Bit-string parity from imaginary-time evolution: the reduction behind the
query floor.

Everything lives in the (N+1)-dimensional symmetric subspace spanned by the
uniform j-excitation states, tensored with a single write qubit.  The string
Hamiltonian couples |j> to |j+1> with weight sqrt((N-j)(j+1))/(4N) while
flipping the write qubit iff bit j is set, so the component of |0>|0> reaches
|N>|parity> and never the wrong-parity state.  The key overlap is

    |<N| exp(-beta (H0 - lam_min)) |0>| = ((1 - e^{-beta/(2N)}) / 2)^N,

and whenever it exceeds 2 eps'/alpha the three-measurement procedure guesses
the parity with probability > 1/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .hamiltonians import Spectrum


@dataclass(frozen=True)
class ParityInstance:
    bits: tuple[int, ...]
    matrix: np.ndarray = field(compare=False)

    def __post_init__(self):
        m = np.asarray(self.matrix)
        object.__setattr__(self, "matrix", m)
        m.setflags(write=False)

    @property
    def n_bits(self) -> int:
        return len(self.bits)

    @property
    def parity(self) -> int:
        return sum(self.bits) % 2


def build_h0(n: int) -> np.ndarray:
    """Symmetric-subspace transverse field: tridiagonal sqrt((N-j)(j+1))/(4N)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    H = np.zeros((n + 1, n + 1))
    for j in range(n):
        c = math.sqrt((n - j) * (j + 1)) / (4.0 * n)
        H[j + 1, j] = c
        H[j, j + 1] = c
    return H


def build_hx(bits) -> ParityInstance:
    """String Hamiltonian on (N+1) x 2 levels; write qubit flips on set bits."""
    bits = tuple(int(b) for b in bits)
    if any(b not in (0, 1) for b in bits) or len(bits) < 1:
        raise ValueError("bits must be a nonempty 0/1 sequence")
    n = len(bits)
    dim = 2 * (n + 1)
    H = np.zeros((dim, dim))
    X = np.array([[0.0, 1.0], [1.0, 0.0]])
    I2 = np.eye(2)
    for j in range(n):
        c = math.sqrt((n - j) * (j + 1)) / (4.0 * n)
        hop = np.zeros((n + 1, n + 1))
        hop[j + 1, j] = 1.0
        flip = X if bits[j] else I2
        block = c * (np.kron(hop, flip) + np.kron(hop.T, flip))
        H += block
    inst = ParityInstance(bits, H)
    _check_connectivity(inst)
    return inst


def _state_index(j: int, w: int, n: int) -> int:
    return 2 * j + w


def _check_connectivity(inst: ParityInstance):
    """BFS over nonzero couplings from |0>|0>; the reachable top level must
    carry the correct parity only."""
    n = inst.n_bits
    H = inst.matrix
    dim = H.shape[0]
    seen = np.zeros(dim, dtype=bool)
    stack = [_state_index(0, 0, n)]
    seen[stack[0]] = True
    while stack:
        i = stack.pop()
        for j in np.nonzero(np.abs(H[i]) > 1e-15)[0]:
            if not seen[j]:
                seen[j] = True
                stack.append(int(j))
    good = _state_index(n, inst.parity, n)
    bad = _state_index(n, inst.parity ^ 1, n)
    if not seen[good] or seen[bad]:
        raise AssertionError("parity graph connectivity violated")


def overlap_formula(n: int, beta: float) -> float:
    """((1 - e^{-beta/(2N)})/2)^N, the heralded amplitude to the top level."""
    if n < 1 or beta < 0:
        raise ValueError("need n >= 1 and beta >= 0")
    return abs((1.0 - math.exp(-beta / (2.0 * n))) / 2.0) ** n


def parity_condition(n: int, beta: float, eps_prime: float, alpha: float) -> bool:
    return overlap_formula(n, beta) > 2.0 * eps_prime / alpha


def largest_n_passing(beta: float, eps_prime: float, alpha: float, n_max: int = 4096) -> int:
    """Largest bit count for which the reduction still guarantees success."""
    n = 0
    while n + 1 <= n_max and parity_condition(n + 1, beta, eps_prime, alpha):
        n += 1
    return n


@dataclass(frozen=True)
class ParityOutcome:
    p_correct: float
    p_wrong: float
    herald_prob: float
    success_prob: float
    guess_distribution: tuple[float, float]
    predicted: int


def parity_via_qite(
    bits,
    beta: float,
    eps_prime: float,
    alpha: float = 1.0,
    block_values: np.ndarray | None = None,
    require_condition: bool = True,
) -> ParityOutcome:
    """Exact analysis of the three-measurement parity procedure.

    Applies the heralded block on |0>|0>, measures the excitation level, then
    the write qubit; any failed herald falls back to a fair coin.  With a
    perfect primitive (block_values None, eps_prime 0) the conditional
    write-qubit outcome is the parity with certainty.
    """
    bits = tuple(int(b) for b in bits)
    n = len(bits)
    if require_condition and not parity_condition(n, beta, eps_prime, alpha):
        raise ValueError(
            "overlap condition violated: the reduction gives no success guarantee"
        )
    inst = build_hx(bits)
    vals, vecs = np.linalg.eigh(inst.matrix)
    lam_min = vals[0]
    if block_values is None:
        f = alpha * np.exp(-beta * (vals - lam_min))
    else:
        f = np.asarray(block_values)
    src = vecs.conj().T[:, _state_index(0, 0, n)]
    out = vecs @ (f * src)
    amp_good = out[_state_index(n, inst.parity, n)]
    amp_bad = out[_state_index(n, inst.parity ^ 1, n)]
    p_correct = abs(amp_good) ** 2
    p_wrong = abs(amp_bad) ** 2
    herald = float(np.vdot(out, out).real)
    success = p_correct + 0.5 * (1.0 - p_correct - p_wrong)
    guess = (success, 1.0 - success) if inst.parity == 0 else (1.0 - success, success)
    predicted = inst.parity if p_correct >= p_wrong else inst.parity ^ 1
    return ParityOutcome(p_correct, p_wrong, herald, success, guess, predicted)


def instance_spectrum(bits) -> Spectrum:
    """Spectrum of the string Hamiltonian with the |0>|0> input overlaps."""
    inst = build_hx(bits)
    vals, vecs = np.linalg.eigh(inst.matrix)
    src = np.zeros(inst.matrix.shape[0])
    src[_state_index(0, 0, len(bits))] = 1.0
    w = np.abs(vecs.conj().T @ src) ** 2
    return Spectrum(vals, w, vecs)


# ---------------------------------------------------------------------------
# ladder-operator encoding
# ---------------------------------------------------------------------------


class QueryCounter:
    """Wraps the string unitary so applications can be counted."""

    def __init__(self, matrix: np.ndarray):
        self.matrix = matrix
        self.calls = 0

    def apply(self) -> np.ndarray:
        self.calls += 1
        return self.matrix


def string_unitary(bits) -> np.ndarray:
    """U = sum_j |j><j| (x) X^{b_j} on the (N+1) x 2 register (j = 0..N).

    The top index j = N carries no bit; it acts as identity there.
    """
    bits = tuple(int(b) for b in bits)
    n = len(bits)
    X = np.array([[0.0, 1.0], [1.0, 0.0]])
    I2 = np.eye(2)
    blocks = [X if (j < n and bits[j]) else I2 for j in range(n + 1)]
    U = np.zeros((2 * (n + 1), 2 * (n + 1)))
    for j, blk in enumerate(blocks):
        U[2 * j : 2 * j + 2, 2 * j : 2 * j + 2] = blk
    return U


def _ladders(n: int) -> tuple[np.ndarray, np.ndarray]:
    jp = np.zeros((n + 1, n + 1))
    jm = np.zeros((n + 1, n + 1))
    for j in range(n):
        jp[j + 1, j] = math.sqrt((n - j) * (j + 1))
    for j in range(1, n + 1):
        jm[j - 1, j] = math.sqrt((n - j + 1) * j)
    return jp, jm


def _contraction_dilation(A: np.ndarray) -> np.ndarray:
    """Unitary [[A, S1], [S2, -A+]] for a (possibly nonnormal) contraction A."""
    d = A.shape[0]
    s1 = _psd_sqrt(np.eye(d) - A @ A.conj().T)
    s2 = _psd_sqrt(np.eye(d) - A.conj().T @ A)
    U = np.zeros((2 * d, 2 * d), dtype=np.complex128)
    view = U.reshape(d, 2, d, 2)
    view[:, 0, :, 0] = A
    view[:, 0, :, 1] = s1
    view[:, 1, :, 0] = s2
    view[:, 1, :, 1] = -A.conj().T
    return U


def _psd_sqrt(M: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(0.5 * (M + M.conj().T))
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.conj().T


def block_encode_hx(bits):
    """Matrix-level encoding H = (J+ U + U J-)/(4N) from one string-unitary call.

    Register order: combiner qubit (x) ladder ancilla (x) system.  The
    combiner selects between the raised and lowered branch, the shared ladder
    ancilla dilates J+-/(2N), and the string unitary is applied exactly once,
    uncontrolled, between the two branches.  Returns (block, counter) where
    `block` is the heralded top-left system operator.
    """
    bits = tuple(int(b) for b in bits)
    n = len(bits)
    dim_s = 2 * (n + 1)
    jp, jm = _ladders(n)
    I2w = np.eye(2)
    up = _contraction_dilation(np.kron(jp, I2w) / (2.0 * n))
    dn = _contraction_dilation(np.kron(jm, I2w) / (2.0 * n))
    counter = QueryCounter(string_unitary(bits))
    ux_big = np.kron(counter.apply(), np.eye(2))  # acts on system (x) ladder ancilla

    dim_sl = 2 * dim_s
    p0 = np.diag([1.0, 0.0])
    p1 = np.diag([0.0, 1.0])
    sel_dn = np.kron(p0, np.eye(dim_sl)) + np.kron(p1, dn)
    middle = np.kron(np.eye(2), ux_big)
    sel_up = np.kron(p0, up) + np.kron(p1, np.eye(dim_sl))
    had = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)
    mix = np.kron(had, np.eye(dim_sl))
    W = mix @ sel_up @ middle @ sel_dn @ mix

    # herald combiner |0> and ladder ancilla |0>
    Wv = W.reshape(2, dim_s, 2, 2, dim_s, 2)
    block = Wv[0, :, 0, 0, :, 0]
    return np.ascontiguousarray(block), counter
