"""Random Hamiltonian ensembles, rescaling, spectra, and success probabilities.

All downstream query-complexity formulas consume a :class:`Spectrum`:
eigenvalues in [-1, 1] (ascending) plus the input-state overlaps
|<eigenvector|input>|^2.  The heralding (post-selection) probability of an
imaginary-time propagator e^{-beta (H - lambda_min)} applied to the input is

    p(beta) = sum_k w_k * exp(-2 beta (lambda_k - lambda_min)),

monotone nonincreasing in beta with floor w(ground subspace).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

AXES = ("X", "Y", "Z")
CLASSES = ("maxcut", "weighted_maxcut", "rbm", "sk_heisenberg", "noninteracting", "custom")

_PAULI = {
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=np.complex128),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128),
}

DENSE_EIGH_MAX_QUBITS = 12
MAX_QUBITS = 15


@dataclass(frozen=True)
class PauliTerm:
    """One weighted Pauli word; an empty word is the identity."""

    coefficient: float
    word: tuple[tuple[int, str], ...]

    def __post_init__(self):
        if not np.isfinite(self.coefficient):
            raise ValueError("coefficient must be finite")
        qubits = [q for q, _ in self.word]
        if len(set(qubits)) != len(qubits):
            raise ValueError("qubit indices in a Pauli word must be distinct")
        for q, ax in self.word:
            if q < 0:
                raise ValueError(f"negative qubit index {q}")
            if ax not in AXES:
                raise ValueError(f"unknown Pauli axis {ax!r}")

    @property
    def is_diagonal(self) -> bool:
        return all(ax == "Z" for _, ax in self.word)


@dataclass(frozen=True)
class HamiltonianSpec:
    """A Pauli-sum Hamiltonian with its generating class tag and seed."""

    n_qubits: int
    terms: tuple[PauliTerm, ...]
    klass: str = "custom"
    seed: int = 0
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not (1 <= self.n_qubits <= MAX_QUBITS):
            raise ValueError(f"n_qubits={self.n_qubits} outside supported range 1..{MAX_QUBITS}")
        if self.klass not in CLASSES:
            raise ValueError(f"unknown Hamiltonian class {self.klass!r}")
        for t in self.terms:
            for q, _ in t.word:
                if q >= self.n_qubits:
                    raise ValueError(f"qubit index {q} >= n_qubits={self.n_qubits}")

    @property
    def is_diagonal(self) -> bool:
        return all(t.is_diagonal for t in self.terms)

    def dense(self) -> np.ndarray:
        """Dense 2^N x 2^N matrix (Hermitian by construction)."""
        dim = 2**self.n_qubits
        H = np.zeros((dim, dim), dtype=np.complex128)
        for term in self.terms:
            op = np.array([[1.0]], dtype=np.complex128)
            axes = dict(term.word)
            for q in range(self.n_qubits):
                op = np.kron(op, _PAULI[axes[q]] if q in axes else np.eye(2))
            H += term.coefficient * op
        return H

    def diagonal_energies(self) -> np.ndarray:
        """Computational-basis energies for purely-Z Hamiltonians.

        Bit b=0 of qubit q carries Z eigenvalue +1.  Vectorized over all
        2^N basis states, which keeps N = 15 classical Ising instances cheap.
        """
        if not self.is_diagonal:
            raise ValueError("diagonal_energies requires a Z-only Hamiltonian")
        n = self.n_qubits
        states = np.arange(2**n)
        energies = np.zeros(2**n)
        for term in self.terms:
            sign = np.ones(2**n)
            for q, _ in term.word:
                bit = (states >> (n - 1 - q)) & 1
                sign *= 1.0 - 2.0 * bit
            energies += term.coefficient * sign
        return energies

    def to_json(self) -> str:
        payload = {
            "n": self.n_qubits,
            "class": self.klass,
            "seed": self.seed,
            "terms": [{"coef": t.coefficient, "word": [[q, ax] for q, ax in t.word]} for t in self.terms],
        }
        return json.dumps(payload)

    @staticmethod
    def from_json(s: str) -> "HamiltonianSpec":
        d = json.loads(s)
        terms = tuple(
            PauliTerm(t["coef"], tuple((int(q), str(ax)) for q, ax in t["word"])) for t in d["terms"]
        )
        return HamiltonianSpec(int(d["n"]), terms, d.get("class", "custom"), int(d.get("seed", 0)))


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues (ascending) with input-state overlaps summing to one.

    Immutable and safely shareable; every complexity formula downstream is a
    pure function of this data.
    """

    eigenvalues: np.ndarray
    overlaps: np.ndarray
    eigenvectors: np.ndarray | None = None

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float)
        w = np.asarray(self.overlaps, dtype=float)
        object.__setattr__(self, "eigenvalues", ev)
        object.__setattr__(self, "overlaps", w)
        if ev.ndim != 1 or w.shape != ev.shape:
            raise ValueError("eigenvalues and overlaps must be 1-d arrays of equal length")
        if np.any(np.diff(ev) < -1e-12):
            raise ValueError("eigenvalues must be ascending")
        if np.any(w < -1e-12):
            raise ValueError("overlaps must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-8:
            raise ValueError(f"overlaps sum to {w.sum()}, expected 1")
        ev.setflags(write=False)
        w.setflags(write=False)
        if self.eigenvectors is not None:
            vecs = np.asarray(self.eigenvectors)
            object.__setattr__(self, "eigenvectors", vecs)
            vecs.setflags(write=False)

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def ground_overlap_sq(self) -> float:
        """Total overlap with the lowest-energy eigenspace (o^2)."""
        mask = self.eigenvalues - self.lambda_min <= 1e-12
        return float(self.overlaps[mask].sum())


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed))


def _complete_graph_pairs(n: int):
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def gen_ensemble(klass: str, n_qubits: int, seed: int = 0, redraw_cap: int = 64) -> HamiltonianSpec:
    """Draw one random instance of the named Hamiltonian class.

    Deterministic for fixed (klass, n_qubits, seed).  Instances whose term
    list is identically zero (possible for binary MaxCut couplings) are
    redrawn from the same stream so that rescaling stays well defined.
    """
    if klass not in CLASSES or klass == "custom":
        raise ValueError(f"unknown ensemble class {klass!r}")
    if not (2 <= n_qubits <= MAX_QUBITS):
        raise ValueError(f"n_qubits={n_qubits} outside 2..{MAX_QUBITS}")
    rng = _rng(seed)
    for _ in range(redraw_cap):
        terms = _draw_terms(klass, n_qubits, rng)
        if any(abs(t.coefficient) > 0 for t in terms):
            return HamiltonianSpec(n_qubits, tuple(terms), klass, seed)
    raise RuntimeError(f"could not draw a nonzero {klass} instance after {redraw_cap} attempts")


def _draw_terms(klass: str, n: int, rng: np.random.Generator) -> list[PauliTerm]:
    pairs = _complete_graph_pairs(n)
    terms: list[PauliTerm] = []
    if klass == "maxcut":
        coupl = rng.integers(0, 2, size=len(pairs))
        terms = [
            PauliTerm(float(c), ((i, "Z"), (j, "Z"))) for (i, j), c in zip(pairs, coupl) if c != 0
        ]
    elif klass == "weighted_maxcut":
        coupl = rng.uniform(0.0, 1.0, size=len(pairs))
        terms = [PauliTerm(float(c), ((i, "Z"), (j, "Z"))) for (i, j), c in zip(pairs, coupl)]
    elif klass == "rbm":
        # bipartite visible/hidden ZZ couplings plus a transverse field on
        # every site; coupling and field distributions are configurable only
        # through this function's source on purpose (kept as simple defaults)
        n_vis = (n + 1) // 2
        visible = range(n_vis)
        hidden = range(n_vis, n)
        for i in visible:
            for j in hidden:
                terms.append(PauliTerm(float(rng.uniform(-1.0, 1.0)), ((i, "Z"), (j, "Z"))))
        for i in range(n):
            terms.append(PauliTerm(float(rng.uniform(0.0, 1.0)), ((i, "X"),)))
    elif klass == "sk_heisenberg":
        for i, j in pairs:
            for ax in AXES:
                terms.append(PauliTerm(float(rng.uniform(-1.0, 1.0)), ((i, ax), (j, ax))))
    elif klass == "noninteracting":
        terms = [PauliTerm(1.0 / n, ((j, "Z"),)) for j in range(n)]
    return terms


def spectral_range(spec: HamiltonianSpec) -> tuple[float, float]:
    """Exact (lambda_min, lambda_max), using the diagonal fast path if possible."""
    if spec.is_diagonal:
        energies = spec.diagonal_energies()
        return float(energies.min()), float(energies.max())
    if spec.n_qubits > DENSE_EIGH_MAX_QUBITS:
        raise ValueError(
            f"dense eigensolve capped at {DENSE_EIGH_MAX_QUBITS} qubits; got {spec.n_qubits}"
        )
    vals = np.linalg.eigvalsh(spec.dense())
    return float(vals[0]), float(vals[-1])


def rescale(spec: HamiltonianSpec, lam_minus: float | None = None, lam_plus: float | None = None) -> HamiltonianSpec:
    """Affine map of the spectrum into [-1, 1].

    With explicit bounds, H' = (H - mean) / half_width for mean = (l+ + l-)/2
    and half_width = (l+ - l-)/2; the inverse temperature transforms as
    beta' = half_width * beta (recorded in metadata).  Bounds default to the
    exact spectral range, which pins lambda_min/max to -1/+1.
    """
    true_min, true_max = spectral_range(spec)
    if lam_minus is None:
        lam_minus = true_min
    if lam_plus is None:
        lam_plus = true_max
    if not lam_minus < lam_plus:
        raise ValueError("need lam_minus < lam_plus")
    if lam_minus > true_min + 1e-10 or lam_plus < true_max - 1e-10:
        raise ValueError(
            f"bounds ({lam_minus}, {lam_plus}) do not contain the spectrum "
            f"({true_min}, {true_max})"
        )
    mean = 0.5 * (lam_plus + lam_minus)
    half_width = 0.5 * (lam_plus - lam_minus)
    new_terms = [PauliTerm(t.coefficient / half_width, t.word) for t in spec.terms]
    if abs(mean) > 0:
        new_terms.append(PauliTerm(-mean / half_width, ()))
    meta = dict(spec.metadata)
    meta.update({"rescaled": True, "beta_scale": half_width, "shift": mean})
    return HamiltonianSpec(spec.n_qubits, tuple(new_terms), spec.klass, spec.seed, meta)


def diagonalize(
    spec: HamiltonianSpec,
    input_state: np.ndarray | str = "mixed",
    dense_cap: int = DENSE_EIGH_MAX_QUBITS,
) -> Spectrum:
    """Exact spectrum plus overlaps of the supplied input state.

    input_state "mixed" stands for the maximally mixed state: every
    eigenvector gets weight 2^-N.  Diagonal (Z-only) Hamiltonians bypass the
    dense eigensolve, so classical Ising classes scale to N = 15; `dense_cap`
    guards the dense path and can be raised explicitly.
    """
    n = spec.n_qubits
    dim = 2**n
    if spec.is_diagonal:
        energies = spec.diagonal_energies()
        order = np.argsort(energies, kind="stable")
        eigenvalues = energies[order]
        if isinstance(input_state, str):
            weights = np.full(dim, 1.0 / dim)
        else:
            vec = np.asarray(input_state, dtype=np.complex128).reshape(dim)
            _check_normalized(vec)
            weights = np.abs(vec[order]) ** 2
        return Spectrum(eigenvalues, weights)
    if n > dense_cap:
        raise ValueError(f"dense eigensolve capped at {dense_cap} qubits")
    H = spec.dense()
    if np.abs(H - H.conj().T).max() > 1e-8:
        raise ValueError("Hamiltonian matrix is not Hermitian")
    vals, vecs = np.linalg.eigh(H)
    if isinstance(input_state, str):
        weights = np.full(dim, 1.0 / dim)
    else:
        vec = np.asarray(input_state, dtype=np.complex128).reshape(dim)
        _check_normalized(vec)
        weights = np.abs(vecs.conj().T @ vec) ** 2
    return Spectrum(vals, weights, vecs)


def _check_normalized(vec: np.ndarray):
    nrm = np.linalg.norm(vec)
    if abs(nrm - 1.0) > 1e-8:
        raise ValueError(f"input state norm {nrm} != 1")


def success_prob(spectrum: Spectrum, beta: float) -> float:
    """Heralding probability sum_k w_k exp(-2 beta (lambda_k - lambda_min))."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    gaps = spectrum.eigenvalues - spectrum.lambda_min
    return float(np.dot(spectrum.overlaps, np.exp(-2.0 * beta * gaps)))


def success_prob_many(spectrum: Spectrum, betas: np.ndarray) -> np.ndarray:
    """Vectorized :func:`success_prob` over a beta array (betas >= 0)."""
    betas = np.asarray(betas, dtype=float)
    gaps = spectrum.eigenvalues - spectrum.lambda_min
    return np.exp(-2.0 * np.outer(betas, gaps)) @ spectrum.overlaps


def inverse_success_prob(spectrum: Spectrum, target: float, p_tol: float = 1e-10) -> float:
    """Monotone bisection solving success_prob(beta) = target.

    Valid targets lie strictly between the ground-overlap floor o^2 and 1.
    The bracket starts at [0, 1] and doubles until it straddles the target.
    """
    floor = spectrum.ground_overlap_sq
    if target > 1.0:
        raise ValueError(f"target {target} > 1 unattainable")
    if target <= floor + p_tol and target < 1.0:
        raise ValueError(f"target {target} at or below the overlap floor {floor}")
    if target >= 1.0:
        return 0.0
    lo, hi = 0.0, 1.0
    while success_prob(spectrum, hi) > target:
        lo, hi = hi, 2.0 * hi
        if hi > 1e12:
            raise RuntimeError("bracket expansion failed; target too close to the floor")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        p = success_prob(spectrum, mid)
        if p > target:
            lo = mid
        else:
            hi = mid
        if abs(p - target) <= p_tol and (hi - lo) <= 1e-12 * max(1.0, hi):
            return mid
    return 0.5 * (lo + hi)


def gibbs_post_selection(spectrum: Spectrum, beta: float, alpha: float = 1.0) -> float:
    """alpha^2 * Z_beta / Z_0 for the full spectrum (input-state independent)."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    if not (0 < alpha <= 1):
        raise ValueError("alpha must lie in (0, 1]")
    gaps = spectrum.eigenvalues - spectrum.lambda_min
    dim = spectrum.eigenvalues.size
    return float(alpha**2 * np.exp(-beta * gaps).sum() / dim)
