"""The nine acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line; the lines are printed in the terminal
summary (and immediately, with -s).
"""
import math
import time
from dataclasses import replace

import numpy as np
import pytest

from pingpong import adversary, cli, codec, qstate
from pingpong.analysis import detection_probability, eve_information, rho_max, s_max_bound
from pingpong.protocol import SessionConfig, derive_seed, run_session
from pingpong.qstate import bell_state, gamma_of

from conftest import ACCEPTANCE, random_density


def record(n, title, ok, detail):
    line = f"criterion {n} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
    ACCEPTANCE[n] = line
    print(line)
    assert ok, line


def test_1_entropy_bound_spot_values():
    a, b = s_max_bound(0.0), s_max_bound(0.75)
    record(1, "s_max spot values", abs(a) <= 1e-12 and abs(b - 2.0) <= 1e-12,
           f"s_max(0)={a!r}, s_max(0.75)={b!r}")


def test_2_detection_bound_random_states():
    rng = np.random.default_rng(derive_seed(2026, 2))
    t0 = time.perf_counter()
    violations = 0
    worst = np.inf
    for _ in range(10_000):
        rho = random_density(rng)
        slack = detection_probability(rho) - gamma_of(rho) / 2
        worst = min(worst, slack)
        violations += slack < -1e-10
    dt = time.perf_counter() - t0
    record(2, "d >= gamma/2 on 1e4 random states", violations == 0 and dt < 10,
           f"violations={violations}, min slack={worst:.3g}, {dt:.2f}s")


def test_3_maximal_eavesdropping_point():
    rho = rho_max(0.75)
    dev = float(np.max(np.abs(rho - np.eye(4) / 4)))
    d = detection_probability(rho)
    record(3, "rho_max(3/4) = I/4 with d = 1/2 >= 3/8",
           dev < 1e-15 and abs(d - 0.5) < 1e-15 and d >= 0.375, f"max|rho - I/4|={dev:.1e}, d={d!r}")


def test_4_round_trip_and_capacity():
    psi = bell_state("psi_minus")
    wrong = 0
    for m in codec.MESSAGES:
        probs = qstate.bell_probabilities(codec.encode(m, psi))
        label = qstate.BELL_LABELS[int(np.argmax(probs))]
        wrong += abs(probs.max() - 1.0) > 1e-12 or codec.decode(label) != m
    rep = cli.compare_capacity(10_000, seed=4)
    ok = (wrong == 0 and rep["improved_bits_per_pair"] == 2.0 and rep["legacy_bits_per_pair"] == 1.0
          and rep["ratio"] == 2 and rep["improved_bit_errors"] == 0 and rep["legacy_bit_errors"] == 0)
    record(4, "dense-coding round trip and doubled capacity", ok,
           f"decode errors={wrong}, {rep['improved_bits_per_pair']} vs {rep['legacy_bits_per_pair']} bits/pair, "
           f"ratio={rep['ratio']}")


@pytest.fixture(scope="module")
def clean_session():
    return run_session(SessionConfig(control_probability=0.5, rng_seed=derive_seed(2026, 5)), 100_000)


def test_5_perfect_channel_soundness(clean_session):
    s = clean_session.summary
    record(5, "no false alarms or bit errors on a clean channel",
           s["runs"] == 100_000 and s["detections"] == 0 and s["bit_errors"] == 0,
           f"runs={s['runs']}, control={s['control_runs']}, detections={s['detections']}, "
           f"bit_errors={s['bit_errors']}")


@pytest.mark.slow
def test_6_intercept_resend_statistics():
    cfg = SessionConfig(control_probability=0.5, abort_on_detection=False, rng_seed=derive_seed(2026, 6))
    t0 = time.perf_counter()
    res = run_session(cfg, 100_000, attack=adversary.intercept_resend("Z"))
    dt = time.perf_counter() - t0
    s = res.summary
    info, err = eve_information(res.records)
    ok = abs(s["detection_rate"] - 0.25) <= 0.01 and abs(info - 1.0) <= 0.05 and dt < 30
    record(6, "intercept-resend detection rate and Eve information", ok,
           f"d={s['detection_rate']:.4f}+-{s['detection_stderr']:.4f}, I={info:.4f}+-{err:.4f}, {dt:.1f}s")


@pytest.mark.slow
def test_7_holevo_dominance():
    t0 = time.perf_counter()
    ok = True
    parts = []
    for i, g in enumerate((0.25, 0.5, 0.75)):
        att = adversary.bell_diagonal_from_gamma(g)
        cfg = SessionConfig(abort_on_detection=False, rng_seed=derive_seed(2026, 70 + i))
        res = run_session(cfg, 40_000, attack=att)
        info, err = eve_information(res.records)
        chi = qstate.holevo(att.eve_ensemble())
        bound = s_max_bound(g)
        ok &= info <= chi + 3 * err and chi <= bound + 1e-10
        parts.append(f"g={g}: I={info:.4f}+-{err:.4f} chi={chi:.4f} s_max={bound:.4f}")
    dt = time.perf_counter() - t0
    ok &= dt < 60
    record(7, "empirical <= Holevo <= s_max", ok, "; ".join(parts) + f"; {dt:.1f}s")


@pytest.mark.slow
def test_8_authentication():
    t = 32
    n = 100_000
    attack = adversary.mitm_tamper("forge_public")
    accepted = 0
    for i in range(n):
        cfg = SessionConfig(control_probability=1.0, auth_tag_bits=t, rng_seed=derive_seed(2026, 80),
                            auth_key=i.to_bytes(8, "little") + b"-session-key")
        accepted += run_session(cfg, 1, attack=attack).summary["auth_failures"] == 0
    p = 2.0 ** -t
    limit = p + 3 * math.sqrt(p * (1 - p) / n)
    honest = run_session(SessionConfig(auth_tag_bits=t, rng_seed=derive_seed(2026, 81)), 20_000)
    quantum_only = run_session(SessionConfig(auth_tag_bits=t, abort_on_detection=False,
                                             rng_seed=derive_seed(2026, 82)), 20_000,
                               attack=adversary.mitm_tamper("unitary", unitary=adversary.GATES["X"]))
    false_alarms = honest.summary["auth_failures"] + quantum_only.summary["auth_failures"]
    record(8, "forged public messages rejected", accepted / n <= limit and false_alarms == 0,
           f"accepted {accepted}/{n} (limit {limit:.2e}), auth failures without tamper={false_alarms}")


def test_9_determinism(tmp_path):
    mismatched = []
    for name in cli.bundled_scenarios():
        scen = cli.load_scenario(name)
        scen = replace(scen, n_runs=min(scen.n_runs, 300 if scen.sweep else 2000))
        out = []
        for rep in ("a", "b"):
            s = replace(scen, out_dir=tmp_path / name / rep, formats=("csv",))
            if s.sweep:
                cli.run_sweep(s)
                out.append(b"".join((s.out_dir / f).read_bytes() for f in ("sweep.csv", "curve.csv")))
            else:
                cli.run_scenario(s)
                out.append((s.out_dir / "runs.csv").read_bytes())
        if out[0] != out[1]:
            mismatched.append(name)
    record(9, "same seed gives byte-identical CSV for every bundled scenario", not mismatched,
           f"{len(cli.bundled_scenarios())} scenarios, mismatched={mismatched}")
