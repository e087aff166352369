"""Print the headline numbers: entropy bound, detection at the maximal-entropy point,
capacity doubling, and intercept-resend statistics.

    python3 scripts/reproduce_claims.py [--runs N] [--seed S]
"""
import argparse

import numpy as np

from pingpong import adversary, analysis, qstate
from pingpong.cli import compare_capacity
from pingpong.protocol import SessionConfig, derive_seed, run_session


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--runs", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    print("gamma   s_max    d_lower  d(rho_max)")
    for g in np.linspace(0, 1, 9):
        rho = analysis.rho_max(g)
        print(f"{g:5.3f}  {analysis.s_max_bound(g):6.4f}   {g / 2:6.4f}   {analysis.detection_probability(rho):6.4f}")

    cap = compare_capacity(min(args.runs, 20_000), args.seed)
    print(f"\ncapacity: legacy {cap['legacy_bits_per_pair']} bits/pair, "
          f"improved {cap['improved_bits_per_pair']} bits/pair, ratio {cap['ratio']}")

    for i, basis in enumerate(("Z", "X"), start=1):
        cfg = SessionConfig(abort_on_detection=False, rng_seed=derive_seed(args.seed, i))
        res = run_session(cfg, args.runs, attack=adversary.intercept_resend(basis))
        s = res.summary
        info, err = analysis.eve_information(res.records)
        chi = qstate.holevo(adversary.intercept_resend(basis).eve_ensemble())
        print(f"intercept-resend {basis}: detection {s['detection_rate']:.4f} +- {s['detection_stderr']:.4f} "
              f"(closed form 0.25), Eve {info:.4f} +- {err:.4f} bits (Holevo {chi:.4f})")


if __name__ == "__main__":
    main()
