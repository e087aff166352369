"""Closed-form security quantities and Monte Carlo estimators."""
from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .qstate import BELL_LABELS, bell_projector, density, trace_ancilla, von_neumann_entropy

CURVE_HEADER = ("gamma", "s_max", "d_lower", "d_exact")


class DomainError(ValueError):
    pass


class InsufficientData(ValueError):
    pass


@dataclass(frozen=True)
class SecurityPoint:
    gamma: float
    s_max: float
    d_lower: float
    d_exact: Optional[float] = None


def _coincidence_projectors():
    p = {k: bell_projector(k) for k in BELL_LABELS}
    pi_z = p["phi_plus"] + p["phi_minus"]
    pi_x = p["phi_plus"] + p["psi_plus"]
    return pi_z, pi_x


_PI_Z, _PI_X = _coincidence_projectors()


def detection_probability(rho: np.ndarray, bases: Sequence[str] = ("Z", "X")) -> float:
    """Chance that one control round flags Eve, with the control basis drawn uniformly from ``bases``.

    Coincidence in B_z happens on span{phi+, phi-}, in B_x on span{phi+, psi+}.
    Assumes the singlet as reference state.
    """
    rho = trace_ancilla(density(rho))
    proj = {"Z": _PI_Z, "X": _PI_X}
    return float(sum(np.trace(rho @ proj[b.upper()]).real for b in bases) / len(bases))


def _check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not 0.0 <= gamma <= 1.0 or math.isnan(gamma):
        raise DomainError(f"gamma must lie in [0, 1], got {gamma!r}")
    return gamma


def _xlog2x(x: float) -> float:
    return 0.0 if x <= 0.0 else x * math.log2(x)


def s_max_bound(gamma: float) -> float:
    """Entropy ceiling in bits for states with singlet infidelity ``gamma``."""
    gamma = _check_gamma(gamma)
    # -gamma log(gamma/3) written as three equal terms so tiny gamma never hits log(0)
    return 0.0 - _xlog2x(1.0 - gamma) - 3.0 * _xlog2x(gamma / 3.0)


def rho_max(gamma: float) -> np.ndarray:
    """Bell-diagonal state with weight 1-gamma on psi- and gamma/3 on the rest."""
    gamma = _check_gamma(gamma)
    w = {k: gamma / 3.0 for k in BELL_LABELS}
    w["psi_minus"] = 1.0 - gamma
    return sum(w[k] * bell_projector(k) for k in BELL_LABELS)


def gamma_d_curve(n_points: int) -> List[SecurityPoint]:
    if n_points < 2:
        raise ValueError(f"need at least 2 points, got {n_points}")
    out = []
    for g in np.linspace(0.0, 1.0, n_points):
        g = float(g)
        out.append(SecurityPoint(g, s_max_bound(g), g / 2.0, detection_probability(rho_max(g))))
    return out


def write_curve_csv(points: Iterable[SecurityPoint], path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(CURVE_HEADER)
        for p in points:
            w.writerow([_fmt(p.gamma), _fmt(p.s_max), _fmt(p.d_lower),
                        "" if p.d_exact is None else _fmt(p.d_exact)])


def _fmt(x: float) -> str:
    return repr(round(float(x), 15))


def binomial_stderr(k: int, n: int) -> float:
    if n <= 0:
        return float("nan")
    p = k / n
    return math.sqrt(p * (1.0 - p) / n)


def _entropy(counts: Counter, n: int) -> float:
    return -sum((c / n) * math.log2(c / n) for c in counts.values() if c)


def mutual_information(pairs: Sequence[Tuple], min_samples: int = 1) -> Tuple[float, float]:
    """Plug-in I(X;Y) in bits with its delta-method standard error."""
    n = len(pairs)
    if n < max(min_samples, 1):
        raise InsufficientData(f"{n} samples, need at least {max(min_samples, 1)}")
    joint = Counter(pairs)
    px = Counter(x for x, _ in pairs)
    py = Counter(y for _, y in pairs)
    info = _entropy(px, n) + _entropy(py, n) - _entropy(joint, n)
    second = 0.0
    for (x, y), c in joint.items():
        pxy = c / n
        lr = math.log2(pxy * n * n / (px[x] * py[y]))
        second += pxy * lr * lr
    var = max(second - info * info, 0.0) / n
    return max(info, 0.0), math.sqrt(var)


def empirical_mutual_information(records, min_samples: int = 100) -> float:
    """I(sent bits; Eve's guess) over message-mode records that carry a guess."""
    return eve_information(records, min_samples)[0]


def eve_information(records, min_samples: int = 100) -> Tuple[float, float]:
    pairs = [(r.sent_bits, r.eve_guess) for r in records
             if r.mode == "message" and not r.loss_flag and r.eve_guess is not None]
    return mutual_information(pairs, min_samples)
