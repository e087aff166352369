"""Dense coding: two bits per travel qubit, plus the original one-bit phase flip."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Tuple

import numpy as np

from . import qstate
from .qstate import BELL_LABELS, apply_on_travel, bell_state

MessagePair = Tuple[int, int]

MESSAGES: Tuple[MessagePair, ...] = ((0, 0), (0, 1), (1, 0), (1, 1))


@dataclass(frozen=True)
class EncodingOp:
    bits: Tuple[int, ...]
    matrix: np.ndarray


def _op(bits, rows) -> EncodingOp:
    m = np.array(rows, dtype=complex)
    m.setflags(write=False)
    return EncodingOp(tuple(bits), m)


ENCODING_OPS: Dict[MessagePair, EncodingOp] = {
    (0, 0): _op((0, 0), [[1, 0], [0, 1]]),
    (0, 1): _op((0, 1), [[1, 0], [0, -1]]),
    (1, 0): _op((1, 0), [[0, 1], [1, 0]]),
    (1, 1): _op((1, 1), [[0, 1], [-1, 0]]),
}

LEGACY_OPS: Dict[int, EncodingOp] = {
    0: _op((0,), [[1, 0], [0, 1]]),
    1: _op((1,), [[1, 0], [0, -1]]),
}


def _check_bits(m) -> MessagePair:
    m = tuple(int(b) for b in m)
    if len(m) != 2 or any(b not in (0, 1) for b in m):
        raise ValueError(f"message must be two bits, got {m!r}")
    return m


def encoding_matrix(m) -> np.ndarray:
    return ENCODING_OPS[_check_bits(m)].matrix


def encode(m, s: np.ndarray) -> np.ndarray:
    """Alice's two-bit encoding on the travel qubit."""
    return apply_on_travel(encoding_matrix(m), s)


def legacy_encode(j: int, s: np.ndarray) -> np.ndarray:
    """One-bit encoding: identity for 0, sigma_z for 1."""
    if j not in (0, 1):
        raise ValueError(f"legacy message must be 0 or 1, got {j!r}")
    return apply_on_travel(LEGACY_OPS[j].matrix, s)


def _label_of(v: np.ndarray) -> str:
    for label in BELL_LABELS:
        if abs(abs(np.vdot(bell_state(label), v)) - 1.0) < 1e-12:
            return label
    raise AssertionError("encoded state is not a Bell state")


@lru_cache(maxsize=None)
def decode_table(initial: str = "psi_minus") -> Dict[str, MessagePair]:
    """Bell label -> message, for a session that starts from ``initial``."""
    start = bell_state(initial)
    return {_label_of(encode(m, start)): m for m in MESSAGES}


@lru_cache(maxsize=None)
def legacy_decode_table(initial: str = "psi_minus") -> Dict[str, Tuple[int]]:
    start = bell_state(initial)
    return {_label_of(legacy_encode(j, start)): (j,) for j in (0, 1)}


def decode(label: str, initial: str = "psi_minus") -> MessagePair:
    return decode_table(initial)[label]


def legacy_decode(label: str, initial: str = "psi_minus") -> Tuple[int] | None:
    """Returns None when the label lies outside the legacy code space."""
    return legacy_decode_table(initial).get(label)


@lru_cache(maxsize=None)
def embedded_op(bits: Tuple[int, ...], anc: int = 1) -> np.ndarray:
    """Full-space travel operator for an encoding, cached for the session loop."""
    table = ENCODING_OPS if len(bits) == 2 else LEGACY_OPS
    key = bits if len(bits) == 2 else bits[0]
    out = qstate.embed_travel(table[key].matrix, anc)
    out.setflags(write=False)
    return out
