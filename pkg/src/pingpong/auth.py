"""Keyed polynomial-evaluation hash for the public classical channel.

The key is expanded with BLAKE2b into an evaluation point ``k`` and an
additive mask ``s`` over GF(2^127 - 1). A payload is split into 15-byte
blocks, each padded with a marker bit, and the tag is the low ``t`` bits of

    (sum_i  c_i * k^(L - i + 1) + s)  mod p

For two distinct payloads of at most L blocks the substitution forgery
probability is at most 2^-t + (L + 1) / p against an adversary that never
sees the key.
"""
from __future__ import annotations

import hashlib
import hmac
import json
from dataclasses import dataclass, field, replace
from typing import Any, Dict

PRIME = (1 << 127) - 1
BLOCK = 15
MAX_TAG_BITS = 120


class AuthFailure(Exception):
    """A public message did not verify under the shared key."""


def _expand_key(key: bytes):
    if not key:
        raise ValueError("authentication key must be nonempty")
    d = hashlib.blake2b(key, digest_size=32, person=b"pingpong-polymac").digest()
    k = int.from_bytes(d[:16], "little") % PRIME
    s = int.from_bytes(d[16:], "little") % PRIME
    return k, s


def poly_hash(payload: bytes, k: int) -> int:
    h = 0
    for i in range(0, len(payload), BLOCK):
        c = int.from_bytes(payload[i:i + BLOCK], "little") | (1 << (8 * BLOCK))
        h = (h + c) * k % PRIME
    # length block keeps prefixes from colliding
    return (h + len(payload)) * k % PRIME


def authenticate(payload: bytes, key: bytes, t: int) -> int:
    """Deterministic ``t``-bit tag of ``payload`` under ``key``."""
    if not 1 <= t <= MAX_TAG_BITS:
        raise ValueError(f"tag length must be in [1, {MAX_TAG_BITS}], got {t}")
    k, s = _expand_key(key)
    return ((poly_hash(payload, k) + s) % PRIME) & ((1 << t) - 1)


def verify(payload: bytes, tag: int, key: bytes, t: int) -> bool:
    expected = authenticate(payload, key, t).to_bytes(16, "little")
    try:
        got = int(tag).to_bytes(16, "little")
    except OverflowError:
        return False
    return hmac.compare_digest(expected, got)


@dataclass(frozen=True)
class PublicMessage:
    sender: str
    kind: str
    seq: int
    body: Dict[str, Any] = field(default_factory=dict)
    tag: int = 0

    def payload(self) -> bytes:
        return json.dumps(
            {"sender": self.sender, "kind": self.kind, "seq": self.seq, "body": self.body},
            sort_keys=True, separators=(",", ":"),
        ).encode()

    def signed(self, key: bytes, t: int) -> "PublicMessage":
        return replace(self, tag=authenticate(self.payload(), key, t))

    def check(self, key: bytes, t: int) -> None:
        if not verify(self.payload(), self.tag, key, t):
            raise AuthFailure(f"{self.kind} message #{self.seq} from {self.sender} failed verification")
