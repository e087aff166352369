"""Alice/Bob session engine: message mode, control mode, authenticated public channel."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, fields
from functools import lru_cache
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from . import codec, qstate
from .adversary import AttackOutcome, AttackStrategy, no_attack
from .analysis import binomial_stderr
from .auth import AuthFailure, PublicMessage, authenticate, verify
from .qstate import BELL_LABELS, HOME, TRAVEL, Basis, bell_measure, bell_state, measure_qubit

__all__ = [
    "SessionConfig", "RunRecord", "SessionResult", "run_session", "control_round",
    "expected_coincidence", "authenticate", "verify", "AuthFailure", "derive_seed",
]

SUMMARY_KEYS = ("runs", "message_runs", "control_runs", "detections", "losses",
                "auth_failures", "bit_errors", "bits_per_pair")


@dataclass(frozen=True)
class SessionConfig:
    control_probability: float = 0.5
    initial_bell: str = "psi_minus"
    auth_key: bytes = b"pre-shared key"
    auth_tag_bits: int = 32
    rng_seed: int = 0
    encoding: str = "dense"
    control_bases: Tuple[str, ...] = ("Z", "X")
    abort_on_detection: bool = True
    loss_threshold: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.control_probability <= 1.0:
            raise ValueError(f"control_probability must lie in [0, 1], got {self.control_probability!r}")
        if self.initial_bell not in BELL_LABELS:
            raise ValueError(f"initial_bell must be one of {BELL_LABELS}, got {self.initial_bell!r}")
        if not self.auth_key:
            raise ValueError("auth_key must be nonempty")
        if not 8 <= self.auth_tag_bits <= 120:
            raise ValueError(f"auth_tag_bits must lie in [8, 120], got {self.auth_tag_bits!r}")
        if self.encoding not in ("dense", "legacy"):
            raise ValueError(f"encoding must be 'dense' or 'legacy', got {self.encoding!r}")
        if not self.control_bases:
            raise ValueError("control_bases must be nonempty")
        for b in self.control_bases:
            qstate.basis(b)
        if not 0.0 <= self.loss_threshold <= 1.0:
            raise ValueError(f"loss_threshold must lie in [0, 1], got {self.loss_threshold!r}")
        if not 0 <= int(self.rng_seed) < 2**64:
            raise ValueError("rng_seed must be a 64-bit unsigned integer")

    @property
    def bits_per_message(self) -> int:
        return 2 if self.encoding == "dense" else 1


@dataclass
class RunRecord:
    run_index: int
    mode: str
    sent_bits: Optional[Tuple[int, ...]] = None
    decoded_bits: Optional[Tuple[int, ...]] = None
    control_basis: Optional[str] = None
    alice_outcome: Optional[int] = None
    bob_outcome: Optional[int] = None
    detected: bool = False
    aborted: bool = False
    loss_flag: bool = False
    auth_failure: bool = False
    eve_guess: Optional[Tuple[int, ...]] = None

    @property
    def bit_errors(self) -> int:
        if self.mode != "message" or self.loss_flag or self.sent_bits is None:
            return 0
        if self.decoded_bits is None:
            return len(self.sent_bits)
        return sum(a != b for a, b in zip(self.sent_bits, self.decoded_bits))


@dataclass
class SessionResult:
    config: SessionConfig
    attack_name: str
    records: List[RunRecord]
    summary: Dict[str, object] = field(default_factory=dict)

    def to_csv(self) -> str:
        return records_to_csv(self.records)

    def to_json(self) -> str:
        return json.dumps(self.summary, indent=2, sort_keys=True) + "\n"


def derive_seed(seed: int, stream: int) -> int:
    """Child seed for ``stream``: SeedSequence(seed, spawn_key=(stream,)) folded to 64 bits."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(stream),)))


def random_bits(seed: int) -> Iterator[int]:
    """Endless uniform bit stream, batched for speed."""
    rng = _rng(seed, 1)
    while True:
        yield from (int(b) for b in rng.integers(0, 2, size=4096))


@lru_cache(maxsize=None)
def expected_coincidence(initial: str, basis_tag: str) -> bool:
    """Whether same-basis outcomes on the untouched pair always coincide."""
    b = qstate.basis(basis_tag)
    rho = qstate.density(bell_state(initial))
    p_same = sum(np.trace(np.kron(p, p) @ rho).real for p in b.projectors)
    if abs(p_same - round(p_same)) > 1e-12:
        raise ValueError(f"{initial} is not perfectly correlated in basis {basis_tag}")
    return bool(round(p_same))


def control_round(shared: np.ndarray, basis_choice: Basis | str, rands: Sequence[float],
                  initial: str = "psi_minus") -> Tuple[bool, Tuple[int, int]]:
    """Alice measures the travel qubit, Bob the home qubit, both in ``basis_choice``.

    For the singlet ``detected`` is simply ``a == b``.
    """
    b = qstate.basis(basis_choice)
    a, shared = measure_qubit(shared, TRAVEL, b, rands[0])
    bob, _ = measure_qubit(shared, HOME, b, rands[1])
    return (a == bob) != expected_coincidence(initial, b.tag), (a, bob)


def _pad(bits: Optional[Tuple[int, ...]]) -> str:
    return "" if bits is None else "".join(str(b) for b in bits)


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, tuple):
        return _pad(v)
    return str(v)


RECORD_COLUMNS = tuple(f.name for f in fields(RunRecord))


def records_to_csv(records: Iterable[RunRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_COLUMNS)
    for r in records:
        w.writerow([_cell(getattr(r, c)) for c in RECORD_COLUMNS])
    return buf.getvalue()


def summarize(records: List[RunRecord], cfg: SessionConfig) -> Dict[str, object]:
    msg = [r for r in records if r.mode == "message"]
    ctl = [r for r in records if r.mode == "control"]
    delivered_msg = [r for r in msg if not r.loss_flag]
    delivered_ctl = [r for r in ctl if not r.loss_flag]
    detections = sum(r.detected for r in records)
    losses = sum(r.loss_flag for r in records)
    bit_errors = sum(r.bit_errors for r in records)
    good_bits = sum(len(r.sent_bits) - r.bit_errors for r in delivered_msg
                    if r.sent_bits is not None and not r.auth_failure)
    n = len(records)
    loss_rate = losses / n if n else 0.0
    return {
        "runs": n,
        "message_runs": len(msg),
        "control_runs": len(ctl),
        "detections": detections,
        "losses": losses,
        "auth_failures": sum(r.auth_failure for r in records),
        "bit_errors": bit_errors,
        "bits_per_pair": good_bits / len(delivered_msg) if delivered_msg else 0.0,
        "delivered_control_runs": len(delivered_ctl),
        "detection_rate": detections / len(delivered_ctl) if delivered_ctl else 0.0,
        "detection_stderr": binomial_stderr(detections, len(delivered_ctl)) if delivered_ctl else 0.0,
        "bit_error_rate": bit_errors / (cfg.bits_per_message * len(delivered_msg)) if delivered_msg else 0.0,
        "loss_rate": loss_rate,
        "loss_stderr": binomial_stderr(losses, n) if n else 0.0,
        "control_loss_rate": (len(ctl) - len(delivered_ctl)) / len(ctl) if ctl else 0.0,
        "loss_alarm": loss_rate > cfg.loss_threshold,
        "aborted": bool(records and records[-1].aborted),
    }


class _Channel:
    """Authenticated public channel with the adversary spliced in."""

    def __init__(self, cfg: SessionConfig, attack: AttackStrategy, rng: np.random.Generator):
        self.key = cfg.auth_key
        self.t = cfg.auth_tag_bits
        self.attack = attack
        self.rng = rng

    def send(self, msg: PublicMessage) -> PublicMessage:
        delivered = self.attack.on_public(msg.signed(self.key, self.t), self.rng)
        delivered.check(self.key, self.t)
        return delivered


def run_session(cfg: SessionConfig, n_runs: int, message_source: Iterable[int] | None = None,
                attack: AttackStrategy | None = None) -> SessionResult:
    """Execute ``n_runs`` protocol rounds and return per-run records plus a summary.

    Alice takes the travel qubit into control mode with probability
    ``cfg.control_probability``. The session stops at the first detection
    (when ``cfg.abort_on_detection``) or at the first public message that
    fails authentication.
    """
    if n_runs < 1:
        raise ValueError(f"n_runs must be >= 1, got {n_runs}")
    attack = attack or no_attack()
    rng = _rng(cfg.rng_seed, 0)
    bits = iter(message_source) if message_source is not None else random_bits(cfg.rng_seed)
    channel = _Channel(cfg, attack, rng)

    dense = cfg.encoding == "dense"
    codebook = dict(codec.ENCODING_OPS) if dense else {(j,): op for j, op in codec.LEGACY_OPS.items()}
    codebook = {m: op.matrix for m, op in codebook.items()}
    table = codec.decode_table(cfg.initial_bell) if dense else codec.legacy_decode_table(cfg.initial_bell)
    anc = attack.ancilla_dim
    prepared = np.kron(bell_state(cfg.initial_bell), attack.initial_ancilla())
    bases = [qstate.basis(b) for b in cfg.control_bases]
    width = cfg.bits_per_message

    records: List[RunRecord] = []
    for run in range(n_runs):
        out = AttackOutcome(codebook=codebook)
        state = attack.on_b_to_a(prepared, rng, out)
        control = rng.random() < cfg.control_probability
        rec = RunRecord(run_index=run, mode="control" if control else "message")
        records.append(rec)
        try:
            if state is None:
                rec.loss_flag = True
                channel.send(PublicMessage("Alice", "loss", run))
                continue
            if control:
                b = bases[int(rng.integers(len(bases)))] if len(bases) > 1 else bases[0]
                a, state = measure_qubit(state, TRAVEL, b, rng.random())
                rec.control_basis, rec.alice_outcome = b.tag, a
                note = channel.send(PublicMessage("Alice", "control", run,
                                                  {"basis": b.tag, "outcome": a}))
                b = qstate.basis(note.body["basis"])
                bob, _ = measure_qubit(state, HOME, b, rng.random())
                rec.bob_outcome = bob
                same = int(note.body["outcome"]) == bob
                rec.detected = same != expected_coincidence(cfg.initial_bell, b.tag)
                channel.send(PublicMessage("Bob", "verdict", run, {"detected": rec.detected}))
                if rec.detected and cfg.abort_on_detection:
                    rec.aborted = True
                    break
            else:
                try:
                    m = tuple(int(next(bits)) for _ in range(width))
                except (StopIteration, RuntimeError):
                    raise ValueError(f"message source exhausted at run {run}") from None
                rec.sent_bits = m
                state = codec.embedded_op(m, anc) @ state
                state = attack.on_a_to_b(state, rng, out)
                label, _ = bell_measure(state, rng.random())
                rec.decoded_bits = table.get(label)
                rec.eve_guess = out.eve_guess
                channel.send(PublicMessage("Bob", "ack", run))
        except AuthFailure:
            rec.auth_failure = True
            rec.aborted = True
            break

    result = SessionResult(cfg, attack.name, records)
    result.summary = summarize(records, cfg)
    result.summary["attack"] = attack.name
    result.summary["seed"] = int(cfg.rng_seed)
    return result
