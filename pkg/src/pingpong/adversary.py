"""Eavesdropping and tampering strategies.

A strategy is an immutable description with three hooks: one per quantum
channel leg (Bob -> Alice, Alice -> Bob) and one on the public classical
channel. Per-run adversary state lives in an :class:`AttackOutcome` owned
by the session, so a strategy object can be shared freely.

States handed to the leg hooks are pure vectors over
``home (x) travel (x) ancilla``; ``ancilla_dim`` says how big the private
system is (1 when the strategy keeps none).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import codec, qstate
from .auth import PublicMessage
from .qstate import BELL_LABELS, Basis, TRAVEL, bell_state, density, measure_qubit

Codebook = Mapping[Tuple[int, ...], np.ndarray]


class InvalidDistribution(ValueError):
    pass


@dataclass
class AttackOutcome:
    eve_guess: Optional[Tuple[int, ...]] = None
    caused_loss: bool = False
    ancilla_state: Optional[np.ndarray] = None
    codebook: Codebook = field(default_factory=lambda: dict(
        (m, op.matrix) for m, op in codec.ENCODING_OPS.items()))
    scratch: Dict[str, Any] = field(default_factory=dict)


def choi_matrix(kraus: Sequence[np.ndarray]) -> np.ndarray:
    """Choi matrix sum_ij |i><j| (x) Phi(|i><j|) of a single-qubit map."""
    c = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            e = np.zeros((2, 2), dtype=complex)
            e[i, j] = 1.0
            out = sum(k @ e @ k.conj().T for k in kraus)
            c += np.kron(e, out)
    return c


def is_valid_channel(choi: np.ndarray, tol: float = qstate.PSD_TOL) -> bool:
    """Completely positive and trace non-increasing."""
    if np.max(np.abs(choi - choi.conj().T)) > tol:
        return False
    if np.linalg.eigvalsh(choi).min() < -tol:
        return False
    # trace over the output factor must be <= identity on the input
    tr_out = np.einsum("iaja->ij", choi.reshape(2, 2, 2, 2))
    return np.linalg.eigvalsh(np.eye(2) - tr_out).min() >= -tol


def _flips(u: np.ndarray, b: Basis) -> bool:
    """Whether ``u`` swaps the two eigenstates of ``b`` (up to phase)."""
    return abs(np.vdot(b.kets[1], u @ b.kets[0])) > 0.5


class AttackStrategy:
    name = "abstract"
    ancilla_dim = 1
    measures = False

    def initial_ancilla(self) -> np.ndarray:
        return np.ones(1, dtype=complex)

    def on_b_to_a(self, state: np.ndarray, rng: np.random.Generator,
                  out: AttackOutcome) -> Optional[np.ndarray]:
        """Returns the state Alice receives, or None when the qubit is withheld."""
        return state

    def on_a_to_b(self, state: np.ndarray, rng: np.random.Generator,
                  out: AttackOutcome) -> np.ndarray:
        return state

    def on_public(self, msg: PublicMessage, rng: np.random.Generator) -> PublicMessage:
        return msg

    def travel_kraus(self) -> List[np.ndarray]:
        """Kraus operators of the Bob -> Alice leg on the travel qubit, ancilla traced out."""
        return [np.eye(2, dtype=complex)]

    def choi(self) -> np.ndarray:
        return choi_matrix(self.travel_kraus())

    def delivery_probability(self) -> float:
        return float(np.trace(sum(k.conj().T @ k for k in self.travel_kraus())).real / 2)

    def post_attack_state(self, initial: str = "psi_minus") -> np.ndarray:
        """Pair density matrix after the first leg, conditioned on delivery."""
        rho = density(bell_state(initial))
        out = sum(_on_travel(k) @ rho @ _on_travel(k).conj().T for k in self.travel_kraus())
        return out / np.trace(out).real

    def eve_ensemble(self, initial: str = "psi_minus",
                     codebook: Codebook | None = None) -> List[Tuple[float, np.ndarray]]:
        """States available to Eve for each equiprobable message, as an ensemble."""
        codebook = codebook or _dense_codebook()
        fixed = np.eye(1, dtype=complex)
        return [(1 / len(codebook), fixed) for _ in codebook]

    def __repr__(self):
        return f"{type(self).__name__}({self.name})"


def _on_travel(k: np.ndarray) -> np.ndarray:
    return np.kron(np.eye(2), k)


def _dense_codebook() -> Dict[Tuple[int, ...], np.ndarray]:
    return {m: op.matrix for m, op in codec.ENCODING_OPS.items()}


class NoAttack(AttackStrategy):
    name = "none"


class InterceptResend(AttackStrategy):
    """Measure the travel qubit on the way out, resend the eigenstate, measure it again on return."""

    measures = True

    def __init__(self, b: Basis | str = "Z"):
        self.basis = qstate.basis(b)
        self.name = f"intercept_resend[{self.basis.tag}]"

    def on_b_to_a(self, state, rng, out):
        r, state = measure_qubit(state, TRAVEL, self.basis, rng.random())
        out.scratch["first"] = r
        return state

    def on_a_to_b(self, state, rng, out):
        r, state = measure_qubit(state, TRAVEL, self.basis, rng.random())
        flip = r ^ out.scratch["first"]
        # first codeword consistent with the observed flip
        for m, u in out.codebook.items():
            if _flips(u, self.basis) == bool(flip):
                out.eve_guess = m
                break
        return state

    def travel_kraus(self):
        return list(self.basis.projectors)

    def eve_ensemble(self, initial="psi_minus", codebook=None):
        codebook = codebook or _dense_codebook()
        p_first = qstate.measurement_probabilities(bell_state(initial), TRAVEL, self.basis)
        members = []
        for u in codebook.values():
            rho = np.zeros((4, 4), dtype=complex)
            for r in (0, 1):
                travel = u @ self.basis.kets[r]
                rho += p_first[r] * np.kron(np.diag([1.0 - r, r]), np.outer(travel, travel.conj()))
            members.append((1 / len(codebook), rho))
        return members


_PAULI_FOR_LABEL = {
    "phi_plus": (1, 1),
    "phi_minus": (1, 0),
    "psi_plus": (0, 1),
    "psi_minus": (0, 0),
}


class BellDiagonalAttack(AttackStrategy):
    """Coherent Pauli attack with a two-qubit ancilla.

    Eve prepares sum_k sqrt(p_k)|k> and applies the encoding unitary
    indexed by k to the travel qubit, controlled on her ancilla. The pair
    becomes Bell diagonal with weights p_k. On the return leg she undoes the
    controlled operation, which leaves Alice's encoding imprinted as signs
    on the ancilla, and measures the ancilla in the matching Hadamard basis.
    With ``measure=False`` the return leg is left untouched.
    """

    ancilla_dim = 4

    def __init__(self, weights: Sequence[float], measure: bool = True):
        w = np.asarray(weights, dtype=float)
        if w.shape != (4,) or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise InvalidDistribution(f"weights must be 4 nonnegative reals summing to 1, got {weights!r}")
        self.weights = w
        self.measure = measure
        self.measures = measure
        self.name = "bell_diagonal[" + ",".join(f"{x:.6g}" for x in w) + "]"
        self.paulis = [codec.encoding_matrix(_PAULI_FOR_LABEL[k]) for k in BELL_LABELS]
        ctrl = sum(np.kron(np.kron(np.eye(2), p), np.diag(np.eye(4)[k]))
                   for k, p in enumerate(self.paulis))
        self._ctrl = ctrl
        self._ctrl_dag = ctrl.conj().T
        # ancilla measurement basis: normalized sign patterns of the dense codewords
        self._meas = np.array([0.5 * self._signs(u) for u in _dense_codebook().values()], dtype=complex)
        self._decisions: Dict[Tuple, List[Tuple[int, ...]]] = {}

    @property
    def gamma(self) -> float:
        return float(1.0 - self.weights[BELL_LABELS.index("psi_minus")])

    def initial_ancilla(self):
        return np.sqrt(self.weights).astype(complex)

    def _signs(self, u: np.ndarray) -> np.ndarray:
        # P_k^dag U P_k = s_k U for Pauli-type P_k
        s = []
        for p in self.paulis:
            v = p.conj().T @ u @ p
            s.append(1.0 if np.allclose(v, u) else -1.0)
        return np.array(s)

    def _eve_vectors(self, codebook: Codebook) -> Dict[Tuple[int, ...], np.ndarray]:
        amp = np.sqrt(self.weights)
        return {m: (amp * self._signs(u)).astype(complex) for m, u in codebook.items()}

    def on_b_to_a(self, state, rng, out):
        return self._ctrl @ state

    def on_a_to_b(self, state, rng, out):
        if not self.measure:
            return state
        state = self._ctrl_dag @ state
        amps = state.reshape(4, 4)
        branches = amps @ self._meas.conj().T
        probs = np.einsum("ik,ik->k", branches.conj(), branches).real
        k = qstate._pick(probs / probs.sum(), rng.random())
        f = self._meas[k]
        amps = np.outer(branches[:, k], f) / np.sqrt(probs[k])
        out.ancilla_state = f
        out.eve_guess = self._decision(out.codebook)[k]
        return amps.reshape(-1)

    def _decision(self, codebook: Codebook) -> List[Tuple[int, ...]]:
        """Maximum-likelihood map from measurement index to codeword."""
        key = tuple(sorted(codebook))
        if key not in self._decisions:
            vecs = self._eve_vectors(codebook)
            self._decisions[key] = [max(vecs, key=lambda m: abs(np.vdot(f, vecs[m])) ** 2)
                                    for f in self._meas]
        return self._decisions[key]

    def travel_kraus(self):
        return [np.sqrt(w) * p for w, p in zip(self.weights, self.paulis)]

    def eve_ensemble(self, initial="psi_minus", codebook=None):
        codebook = codebook or _dense_codebook()
        vecs = self._eve_vectors(codebook)
        return [(1 / len(vecs), density(v)) for v in vecs.values()]


class MitmTamper(AttackStrategy):
    """Return-leg or public-channel tampering that does not try to learn the message."""

    def __init__(self, mode: str, unitary: np.ndarray | None = None,
                 basis: Basis | str | None = None, tag_guess: str = "keep",
                 tag_bits: int = 32):
        if mode not in ("unitary", "measure", "forge_public"):
            raise ValueError(f"unknown tamper mode {mode!r}")
        self.mode = mode
        if mode == "unitary":
            if unitary is None:
                raise ValueError("unitary mode needs a 2x2 unitary")
            qstate.check_unitary(unitary)
            self.unitary = np.asarray(unitary, dtype=complex)
            self._full = qstate.embed_travel(self.unitary)
        if mode == "measure":
            self.basis = qstate.basis(basis or "Z")
        if tag_guess not in ("keep", "random"):
            raise ValueError(f"tag_guess must be 'keep' or 'random', got {tag_guess!r}")
        self.tag_guess = tag_guess
        self.tag_bits = int(tag_bits)
        self.name = f"mitm_tamper[{mode}]"

    def on_a_to_b(self, state, rng, out):
        if self.mode == "unitary":
            full = self._full if state.shape[0] == 4 else qstate.embed_travel(
                self.unitary, qstate.ancilla_dim(state))
            return full @ state
        if self.mode == "measure":
            _, state = measure_qubit(state, TRAVEL, self.basis, rng.random())
        return state

    def on_public(self, msg, rng):
        if self.mode != "forge_public" or msg.kind != "control":
            return msg
        body = dict(msg.body)
        body["outcome"] = 1 - int(body["outcome"])
        if self.tag_guess == "random":
            guess = int.from_bytes(rng.bytes(16), "little") & ((1 << self.tag_bits) - 1)
            return replace(msg, body=body, tag=guess)
        return replace(msg, body=body)


class LossHiding(AttackStrategy):
    """Withhold the travel qubit with probability ``loss_rate``, otherwise run ``inner``."""

    def __init__(self, loss_rate: float, inner: AttackStrategy | None = None):
        if not 0.0 <= loss_rate <= 1.0:
            raise ValueError(f"loss_rate must lie in [0, 1], got {loss_rate!r}")
        self.loss_rate = float(loss_rate)
        self.inner = inner or NoAttack()
        self.name = f"loss_hiding[{self.loss_rate:g}]({self.inner.name})"
        self.ancilla_dim = self.inner.ancilla_dim
        self.measures = self.inner.measures

    @property
    def gamma(self):
        return getattr(self.inner, "gamma", None)

    def initial_ancilla(self):
        return self.inner.initial_ancilla()

    def on_b_to_a(self, state, rng, out):
        if rng.random() < self.loss_rate:
            out.caused_loss = True
            return None
        return self.inner.on_b_to_a(state, rng, out)

    def on_a_to_b(self, state, rng, out):
        return self.inner.on_a_to_b(state, rng, out)

    def on_public(self, msg, rng):
        return self.inner.on_public(msg, rng)

    def travel_kraus(self):
        return [np.sqrt(1.0 - self.loss_rate) * k for k in self.inner.travel_kraus()]

    def post_attack_state(self, initial="psi_minus"):
        return self.inner.post_attack_state(initial)

    def eve_ensemble(self, initial="psi_minus", codebook=None):
        return self.inner.eve_ensemble(initial, codebook)


def no_attack() -> AttackStrategy:
    return NoAttack()


def intercept_resend(b: Basis | str = "Z") -> AttackStrategy:
    return InterceptResend(b)


def bell_diagonal_attack(p_phi_plus: float, p_phi_minus: float, p_psi_plus: float,
                         p_psi_minus: float, measure: bool = True) -> AttackStrategy:
    return BellDiagonalAttack((p_phi_plus, p_phi_minus, p_psi_plus, p_psi_minus), measure)


def bell_diagonal_from_gamma(gamma: float, measure: bool = True) -> AttackStrategy:
    """Bell-diagonal attack whose post-attack state is the maximal-entropy one for ``gamma``."""
    if not 0.0 <= gamma <= 1.0:
        raise InvalidDistribution(f"gamma must lie in [0, 1], got {gamma!r}")
    g3 = gamma / 3.0
    return BellDiagonalAttack((g3, g3, g3, 1.0 - gamma), measure)


def mitm_tamper(mode: str, unitary=None, basis=None, tag_guess: str = "keep",
                tag_bits: int = 32) -> AttackStrategy:
    return MitmTamper(mode, unitary=unitary, basis=basis, tag_guess=tag_guess, tag_bits=tag_bits)


def loss_hiding(loss_rate: float, inner: AttackStrategy | None = None) -> AttackStrategy:
    return LossHiding(loss_rate, inner)


GATES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
}


def _flag(v) -> bool:
    if isinstance(v, bool):
        return v
    return str(v).strip().lower() in ("1", "true", "yes", "on")


def make_attack(name: str, params: Mapping[str, Any] | None = None) -> AttackStrategy:
    """Build a strategy from a name and string-or-typed parameters (config layer)."""
    p = dict(params or {})
    allowed = ATTACK_PARAMS.get(name)
    if allowed is None:
        raise ValueError(f"unknown attack {name!r}; expected one of {sorted(ATTACK_PARAMS)}")
    if name != "loss_hiding":
        unknown = set(p) - allowed
        if unknown:
            raise ValueError(f"unknown parameters for {name}: {sorted(unknown)}")
    if name in ("none", "no_attack"):
        return no_attack()
    if name == "intercept_resend":
        return intercept_resend(p.get("basis", "Z"))
    if name == "bell_diagonal":
        measure = _flag(p.get("measure", True))
        if "gamma" in p:
            return bell_diagonal_from_gamma(float(p["gamma"]), measure)
        keys = ("p_phi_plus", "p_phi_minus", "p_psi_plus", "p_psi_minus")
        missing = [k for k in keys if k not in p]
        if missing:
            raise ValueError(f"bell_diagonal needs gamma or all of {keys}; missing {missing}")
        return bell_diagonal_attack(*(float(p[k]) for k in keys), measure=measure)
    if name == "mitm_tamper":
        mode = p.get("mode", "forge_public")
        gate = p.get("gate", "X")
        if mode == "unitary" and str(gate).upper() not in GATES:
            raise ValueError(f"unknown gate {gate!r}; expected one of {sorted(GATES)}")
        return mitm_tamper(mode, unitary=GATES.get(str(gate).upper()),
                           basis=p.get("basis"), tag_guess=p.get("tag_guess", "keep"),
                           tag_bits=int(p.get("tag_bits", 32)))
    if name == "loss_hiding":
        inner_name = p.pop("inner", "none")
        rate = float(p.pop("loss_rate", 0.0))
        return loss_hiding(rate, make_attack(inner_name, p))
    raise AssertionError(name)


ATTACK_PARAMS = {
    "none": set(),
    "no_attack": set(),
    "intercept_resend": {"basis"},
    "bell_diagonal": {"gamma", "measure", "p_phi_plus", "p_phi_minus", "p_psi_plus", "p_psi_minus"},
    "mitm_tamper": {"mode", "gate", "basis", "tag_guess", "tag_bits"},
    "loss_hiding": {"loss_rate", "inner"},
}
