"""Eve discards a fraction of travel qubits and intercept-resends the rest.

Detection conditioned on delivery stays at the intercept-resend value while the
loss statistic grows with the discard rate, so only the loss alarm separates the
attack from a lossy but honest channel.

    python3 scripts/loss_hiding_study.py [--runs N] [--seed S] [--threshold T]
"""
import argparse

import numpy as np

from pingpong import adversary
from pingpong.protocol import SessionConfig, derive_seed, run_session


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--runs", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=2)
    ap.add_argument("--threshold", type=float, default=0.2)
    args = ap.parse_args()

    print("loss   loss_rate        detection|delivered   alarm")
    for i, q in enumerate(np.linspace(0, 0.9, 10)):
        cfg = SessionConfig(abort_on_detection=False, loss_threshold=args.threshold,
                            rng_seed=derive_seed(args.seed, i))
        att = adversary.loss_hiding(float(q), adversary.intercept_resend("Z"))
        s = run_session(cfg, args.runs, attack=att).summary
        print(f"{q:4.2f}   {s['loss_rate']:.4f}+-{s['loss_stderr']:.4f}   "
              f"{s['detection_rate']:.4f}+-{s['detection_stderr']:.4f}       {s['loss_alarm']}")


if __name__ == "__main__":
    main()
