"""Exact state engine for the home/travel qubit pair.

States are plain numpy arrays. A pure state is a vector, a mixed state a
square matrix. The tensor order is ``home (x) travel (x) ancilla`` where the
ancilla factor is optional and only used by adversaries that keep a private
system; with no ancilla the arrays have dimension 4 and amplitudes are
ordered |00>, |01>, |10>, |11> (home index first).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Tuple

import numpy as np

STRUCT_TOL = 1e-12
PSD_TOL = 1e-10
UNITARY_TOL = 1e-10
DEGENERATE_TOL = 1e-14

BELL_LABELS = ("phi_plus", "phi_minus", "psi_plus", "psi_minus")

HOME = "home"
TRAVEL = "travel"

_SQ2 = 1.0 / np.sqrt(2.0)
I2 = np.eye(2, dtype=complex)


class NonUnitary(ValueError):
    pass


class DegenerateState(ValueError):
    """A forced measurement branch has (numerically) zero probability."""


class InvalidState(ValueError):
    pass


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


KET0 = _frozen([1, 0])
KET1 = _frozen([0, 1])
KET_PLUS = _frozen([_SQ2, _SQ2])
KET_MINUS = _frozen([_SQ2, -_SQ2])


@dataclass(frozen=True)
class Basis:
    tag: str
    kets: Tuple[np.ndarray, np.ndarray]

    @property
    def projectors(self) -> Tuple[np.ndarray, np.ndarray]:
        return tuple(np.outer(k, k.conj()) for k in self.kets)

    def __repr__(self):
        return f"Basis({self.tag})"


Z = Basis("Z", (KET0, KET1))
X = Basis("X", (KET_PLUS, KET_MINUS))
BASES = {"Z": Z, "X": X}


def basis(tag: str | Basis) -> Basis:
    if isinstance(tag, Basis):
        return tag
    try:
        return BASES[str(tag).upper()]
    except KeyError:
        raise ValueError(f"unknown basis {tag!r}; expected one of {sorted(BASES)}") from None


_BELL = {
    "phi_plus": _frozen([_SQ2, 0, 0, _SQ2]),
    "phi_minus": _frozen([_SQ2, 0, 0, -_SQ2]),
    "psi_plus": _frozen([0, _SQ2, _SQ2, 0]),
    "psi_minus": _frozen([0, _SQ2, -_SQ2, 0]),
}
_BELL_PROJ = {k: _frozen(np.outer(v, v.conj())) for k, v in _BELL.items()}


def bell_state(label: str) -> np.ndarray:
    """Return the Bell vector for ``label``.

    Phase convention: the first nonzero amplitude is real and positive.
    """
    try:
        return _BELL[label]
    except KeyError:
        raise ValueError(f"unknown Bell label {label!r}") from None


def bell_projector(label: str) -> np.ndarray:
    bell_state(label)
    return _BELL_PROJ[label]


def ket(*bits: int) -> np.ndarray:
    """Computational basis product state, e.g. ``ket(0, 1)`` is |01>."""
    v = np.array([1.0 + 0j])
    for b in bits:
        v = np.kron(v, KET1 if b else KET0)
    return v


def density(s: np.ndarray) -> np.ndarray:
    """Promote a vector to a density matrix; matrices pass through."""
    s = np.asarray(s, dtype=complex)
    if s.ndim == 1:
        return np.outer(s, s.conj())
    return s


def is_vector(s) -> bool:
    return np.ndim(s) == 1


def canonical_phase(v: np.ndarray) -> np.ndarray:
    """Rotate a vector so its first nonzero amplitude is real positive."""
    v = np.asarray(v, dtype=complex)
    nz = np.flatnonzero(np.abs(v) > 1e-12)
    if nz.size == 0:
        return v
    a = v[nz[0]]
    return v * (abs(a) / a)


def same_up_to_phase(a, b, tol: float = STRUCT_TOL) -> bool:
    return abs(abs(np.vdot(a, b)) - 1.0) < tol and abs(np.vdot(a, a) - 1) < tol


def check_state(s: np.ndarray, tol: float = STRUCT_TOL) -> None:
    """Raise InvalidState unless ``s`` is a normalized vector or valid density matrix."""
    s = np.asarray(s)
    if s.ndim == 1:
        n = np.vdot(s, s).real
        if abs(n - 1.0) > tol:
            raise InvalidState(f"vector norm^2 {n!r} != 1")
        return
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise InvalidState(f"bad shape {s.shape}")
    if np.max(np.abs(s - s.conj().T)) > tol:
        raise InvalidState("matrix is not Hermitian")
    tr = np.trace(s).real
    if abs(tr - 1.0) > tol:
        raise InvalidState(f"trace {tr!r} != 1")
    lam = np.linalg.eigvalsh(s).min()
    if lam < -PSD_TOL:
        raise InvalidState(f"negative eigenvalue {lam!r}")


def ancilla_dim(s: np.ndarray) -> int:
    d = np.shape(s)[0]
    if d % 4:
        raise InvalidState(f"dimension {d} is not 4 * ancilla")
    return d // 4


def embed_home(op: np.ndarray, anc: int = 1) -> np.ndarray:
    return np.kron(np.kron(op, I2), np.eye(anc))


def embed_travel(op: np.ndarray, anc: int = 1) -> np.ndarray:
    return np.kron(np.kron(I2, op), np.eye(anc))


def _conjugate(op: np.ndarray, s: np.ndarray) -> np.ndarray:
    if s.ndim == 1:
        return op @ s
    return op @ s @ op.conj().T


def check_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> None:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise NonUnitary(f"bad shape {u.shape}")
    err = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
    if err > tol:
        raise NonUnitary(f"U^dag U deviates from identity by {err:.3g}")


def apply_on_travel(u: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Apply a single-qubit unitary to the travel qubit of ``s``."""
    check_unitary(u)
    s = np.asarray(s, dtype=complex)
    return _conjugate(embed_travel(np.asarray(u, dtype=complex), ancilla_dim(s)), s)


def _branch_probability(proj_full: np.ndarray, s: np.ndarray) -> float:
    if s.ndim == 1:
        w = proj_full @ s
        return float(np.vdot(w, w).real)
    return float(np.trace(proj_full @ s).real)


def _collapse(proj_full: np.ndarray, s: np.ndarray, p: float) -> np.ndarray:
    if p < DEGENERATE_TOL:
        raise DegenerateState(f"branch probability {p:.3g} too small to normalize")
    if s.ndim == 1:
        return (proj_full @ s) / np.sqrt(p)
    return proj_full @ s @ proj_full / p


def _pick(probs: Sequence[float], rand: float) -> int:
    """Inverse-CDF choice; branches below DEGENERATE_TOL are never selected."""
    live = [k for k, p in enumerate(probs) if p >= DEGENERATE_TOL]
    acc = 0.0
    for k in live[:-1]:
        acc += probs[k]
        if rand < acc:
            return k
    return live[-1]


@lru_cache(maxsize=None)
def _embedded_projectors(which: str, tag: str, anc: int) -> Tuple[np.ndarray, np.ndarray]:
    if which not in (HOME, TRAVEL):
        raise ValueError(f"which must be 'home' or 'travel', got {which!r}")
    embed = embed_home if which == HOME else embed_travel
    return tuple(_frozen(embed(p, anc)) for p in BASES[tag].projectors)


@lru_cache(maxsize=None)
def _embedded_bell(anc: int) -> Tuple[np.ndarray, ...]:
    return tuple(_frozen(np.kron(_BELL_PROJ[k], np.eye(anc))) for k in BELL_LABELS)


def measure_qubit(s: np.ndarray, which: str, b: Basis | str, rand: float,
                  outcome: int | None = None) -> Tuple[int, np.ndarray]:
    """Projective measurement of one qubit of the pair.

    The outcome is 0 iff ``rand < p(0)``. Passing ``outcome`` forces the
    branch instead; forcing a zero-probability branch raises DegenerateState.
    """
    s = np.asarray(s, dtype=complex)
    projs = _embedded_projectors(which, basis(b).tag, ancilla_dim(s))
    p0 = _branch_probability(projs[0], s)
    if outcome is None:
        outcome = _pick((p0, 1.0 - p0), rand)
    p = p0 if outcome == 0 else 1.0 - p0
    return outcome, _collapse(projs[outcome], s, p)


def measurement_probabilities(s: np.ndarray, which: str, b: Basis | str) -> np.ndarray:
    s = np.asarray(s, dtype=complex)
    projs = _embedded_projectors(which, basis(b).tag, ancilla_dim(s))
    return np.array([_branch_probability(p, s) for p in projs])


def bell_probabilities(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=complex)
    return np.array([_branch_probability(p, s) for p in _embedded_bell(ancilla_dim(s))])


def bell_measure(s: np.ndarray, rand: float) -> Tuple[str, np.ndarray]:
    """Measure the pair in the Bell basis.

    Labels are sampled by inverse CDF over the order of ``BELL_LABELS``.
    """
    s = np.asarray(s, dtype=complex)
    probs = bell_probabilities(s)
    k = _pick(probs, rand)
    return BELL_LABELS[k], _collapse(_embedded_bell(ancilla_dim(s))[k], s, probs[k])


def partial_trace(s: np.ndarray, keep: str) -> np.ndarray:
    """Reduce a pair state to the home or travel qubit.

    Any ancilla factor is traced out as well.
    """
    rho = density(s)
    anc = ancilla_dim(rho)
    t = rho.reshape(2, 2, anc, 2, 2, anc)
    if keep == HOME:
        return np.einsum("ajkbjk->ab", t)
    if keep == TRAVEL:
        return np.einsum("iakibk->ab", t)
    raise ValueError(f"keep must be 'home' or 'travel', got {keep!r}")


def trace_ancilla(s: np.ndarray) -> np.ndarray:
    """Drop the adversary factor, returning the 4x4 pair density matrix."""
    rho = density(s)
    anc = ancilla_dim(rho)
    if anc == 1:
        return rho
    return np.einsum("ikjk->ij", rho.reshape(4, anc, 4, anc))


def pair_ancilla_state(s: np.ndarray) -> np.ndarray:
    """Reduced state of the ancilla alone."""
    rho = density(s)
    anc = ancilla_dim(rho)
    return np.einsum("kikj->ij", rho.reshape(4, anc, 4, anc))


def von_neumann_entropy(s: np.ndarray) -> float:
    """Entropy in bits, with 0 log 0 taken as 0."""
    lam = np.linalg.eigvalsh(density(s))
    lam = lam[lam > 1e-15]
    h = float(-np.sum(lam * np.log2(lam)))
    return h if h > 0.0 else 0.0


def fidelity_pure(ref: np.ndarray, s: np.ndarray) -> float:
    """sqrt(<ref|s|ref>) for a pure reference state."""
    ref = np.asarray(ref, dtype=complex)
    overlap = np.vdot(ref, density(s) @ ref).real
    return float(np.sqrt(min(max(overlap, 0.0), 1.0)))


def gamma_of(s: np.ndarray) -> float:
    """Infidelity with the singlet: 1 - <psi-|s|psi->."""
    psi = _BELL["psi_minus"]
    return float(1.0 - np.vdot(psi, density(trace_ancilla(s)) @ psi).real)


def check_ensemble(members) -> None:
    total = sum(p for p, _ in members)
    if abs(total - 1.0) > STRUCT_TOL:
        raise InvalidState(f"ensemble probabilities sum to {total!r}")
    if any(p < 0 or p > 1 for p, _ in members):
        raise InvalidState("ensemble probability outside [0, 1]")


def holevo(members: Sequence[Tuple[float, np.ndarray]]) -> float:
    """Holevo quantity of an ensemble given as ``[(p_i, rho_i), ...]``."""
    check_ensemble(members)
    avg = sum(p * density(r) for p, r in members)
    chi = von_neumann_entropy(avg) - sum(p * von_neumann_entropy(r) for p, r in members)
    return chi + 0.0
