"""Scenario runner.

Usage::

    pingpong run <config|bundled-name> [--seed S] [--runs N] [--out-dir D] [--format csv|json]
    pingpong sweep <config|bundled-name> [...same flags...] [--jobs J]
    pingpong compare-capacity [--runs N] [--seed S] [--out-dir D]
    pingpong curve --points N --out path.csv

Scenario files are INI: sections ``[scenario]``, ``[session]``, ``[attack]``
and optionally ``[sweep]`` and ``[output]``. Every per-session seed is
``derive_seed(scenario_seed, index)``, i.e. numpy's SeedSequence with the
session index as spawn key, so sweep points are independent of execution
order.
"""
from __future__ import annotations

import argparse
import configparser
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from . import adversary, analysis, qstate
from .protocol import SUMMARY_KEYS, SessionConfig, SessionResult, derive_seed, run_session


class ConfigError(ValueError):
    pass


SESSION_FIELDS = {
    "control_probability": float,
    "initial_bell": str,
    "auth_tag_bits": int,
    "encoding": str,
    "loss_threshold": float,
}


@dataclass
class Scenario:
    name: str
    session: SessionConfig
    attack_name: str
    attack_params: Dict[str, str]
    n_runs: int
    seed: int
    sweep: Optional[Tuple[str, List[float]]] = None
    out_dir: Path = Path("out")
    formats: Tuple[str, ...] = ("csv", "json")
    min_eve_samples: int = 100

    def attack(self, params: Dict[str, str] | None = None) -> adversary.AttackStrategy:
        return adversary.make_attack(self.attack_name, params if params is not None else self.attack_params)


def _bool(v: str) -> bool:
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {v!r}")


def _grid(text: str) -> List[float]:
    text = text.strip()
    if text.startswith("linspace(") and text.endswith(")"):
        a, b, n = (x.strip() for x in text[len("linspace("):-1].split(","))
        n = int(n)
        if n < 2:
            raise ConfigError("linspace needs at least 2 points")
        return [float(a) + (float(b) - float(a)) * i / (n - 1) for i in range(n)]
    return [float(x) for x in text.replace("\n", ",").split(",") if x.strip()]


def bundled_scenarios() -> List[str]:
    return sorted(p.name[:-4] for p in resources.files("pingpong.scenarios").iterdir()
                  if p.name.endswith(".ini"))


def _read_text(path: str) -> Tuple[str, str]:
    p = Path(path)
    if p.exists():
        return p.stem, p.read_text()
    if path in bundled_scenarios():
        return path, resources.files("pingpong.scenarios").joinpath(path + ".ini").read_text()
    raise FileNotFoundError(f"no scenario file {path!r} (bundled: {', '.join(bundled_scenarios())})")


def load_scenario(path: str) -> Scenario:
    name, text = _read_text(path)
    return parse_scenario(text, name)


def parse_scenario(text: str, name: str = "scenario") -> Scenario:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"malformed config: {e}") from None
    for sec in ("session", "attack"):
        if not cp.has_section(sec):
            raise ConfigError(f"missing [{sec}] section")
    meta = cp["scenario"] if cp.has_section("scenario") else {}
    try:
        kwargs: Dict[str, Any] = {}
        sess = cp["session"]
        for key, value in sess.items():
            if key in SESSION_FIELDS:
                kwargs[key] = SESSION_FIELDS[key](value)
            elif key == "auth_key":
                kwargs["auth_key"] = value.encode()
            elif key == "abort_on_detection":
                kwargs[key] = _bool(value)
            elif key == "control_bases":
                kwargs[key] = tuple(b.strip().upper() for b in value.split(",") if b.strip())
            else:
                raise ConfigError(f"unknown [session] key {key!r}")
        seed = int(meta.get("seed", "0"))
        n_runs = int(meta.get("runs", "1000"))
        kwargs["rng_seed"] = derive_seed(seed, 0)
        session = SessionConfig(**kwargs)
        attack_params = dict(cp["attack"])
        attack_name = attack_params.pop("name", "none")
        sweep = None
        if cp.has_section("sweep"):
            sweep = (cp["sweep"]["parameter"].strip(), _grid(cp["sweep"]["grid"]))
        out = cp["output"] if cp.has_section("output") else {}
        formats = tuple(f.strip() for f in out.get("formats", "csv,json").split(",") if f.strip())
        scen = Scenario(
            name=meta.get("name", name),
            session=session,
            attack_name=attack_name,
            attack_params=attack_params,
            n_runs=n_runs,
            seed=seed,
            sweep=sweep,
            out_dir=Path(out.get("dir", f"out/{name}")),
            formats=formats,
            min_eve_samples=int(meta.get("min_eve_samples", "100")),
        )
    except ConfigError:
        raise
    except (ValueError, KeyError) as e:
        raise ConfigError(str(e)) from None
    validate(scen)
    return scen


def validate(scen: Scenario) -> None:
    if scen.n_runs < 1:
        raise ConfigError(f"runs must be >= 1, got {scen.n_runs}")
    if not 0 <= scen.seed < 2**64:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    bad = set(scen.formats) - {"csv", "json"}
    if bad:
        raise ConfigError(f"unknown output formats {sorted(bad)}")
    try:
        scen.attack()
        if scen.sweep:
            for v in scen.sweep[1]:
                _point(scen, v)
    except (ValueError, TypeError) as e:
        raise ConfigError(str(e)) from None


def _point(scen: Scenario, value: float) -> Tuple[SessionConfig, adversary.AttackStrategy]:
    """Session config and attack for one sweep grid value."""
    param = scen.sweep[0]
    if param.startswith("session."):
        key = param.split(".", 1)[1]
        if key not in SESSION_FIELDS or SESSION_FIELDS[key] is not float:
            raise ConfigError(f"cannot sweep session parameter {key!r}")
        return replace(scen.session, **{key: float(value)}), scen.attack()
    key = param.split(".", 1)[1] if param.startswith("attack.") else param
    params = dict(scen.attack_params)
    params[key] = repr(float(value))
    return scen.session, scen.attack(params)


def report(result: SessionResult, attack: adversary.AttackStrategy, min_eve_samples: int = 100) -> Dict[str, Any]:
    """Session summary enriched with closed-form references and Eve's information."""
    cfg = result.config
    s = dict(result.summary)
    rho = attack.post_attack_state(cfg.initial_bell)
    gamma = getattr(attack, "gamma", None)
    if gamma is None:
        gamma = qstate.gamma_of(rho)
        gamma = 0.0 if abs(gamma) < 1e-12 else gamma
    s["gamma"] = gamma
    s["d_closed_form"] = (analysis.detection_probability(rho, cfg.control_bases)
                          if cfg.initial_bell == "psi_minus" else None)
    s["d_lower"] = gamma / 2.0
    s["s_max"] = analysis.s_max_bound(min(max(gamma, 0.0), 1.0))
    codebook = None
    if cfg.encoding == "legacy":
        from .codec import LEGACY_OPS
        codebook = {(j,): op.matrix for j, op in LEGACY_OPS.items()}
    s["holevo_ceiling"] = qstate.holevo(attack.eve_ensemble(cfg.initial_bell, codebook))
    try:
        info, err = analysis.eve_information(result.records, min_eve_samples)
        s["eve_information"], s["eve_information_stderr"] = info, err
    except analysis.InsufficientData:
        s["eve_information"], s["eve_information_stderr"] = None, None
    return s


def _run_point(args) -> Tuple[SessionResult, Dict[str, Any]]:
    cfg, attack, n_runs, min_eve = args
    res = run_session(cfg, n_runs, attack=attack)
    return res, report(res, attack, min_eve)


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write(text)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def run_scenario(scen: Scenario) -> Dict[str, Any]:
    attack = scen.attack()
    res, summary = _run_point((scen.session, attack, scen.n_runs, scen.min_eve_samples))
    summary["scenario"] = scen.name
    if "csv" in scen.formats:
        _write(scen.out_dir / "runs.csv", res.to_csv())
    if "json" in scen.formats:
        _write(scen.out_dir / "summary.json", _dumps(summary))
    return summary


SWEEP_COLUMNS = ("value", "runs", "control_runs", "delivered_control_runs", "detections",
                 "detection_rate", "detection_stderr", "d_closed_form", "gamma", "loss_rate",
                 "bit_errors", "eve_information", "eve_information_stderr", "holevo_ceiling", "s_max")


def run_sweep(scen: Scenario, jobs: int = 1) -> List[Dict[str, Any]]:
    if scen.sweep is None:
        raise ConfigError("scenario has no [sweep] section")
    param, grid = scen.sweep
    work = []
    for i, v in enumerate(grid):
        cfg, attack = _point(scen, v)
        cfg = replace(cfg, rng_seed=derive_seed(scen.seed, i))
        work.append((cfg, attack, scen.n_runs, scen.min_eve_samples))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_point, work))
    else:
        results = [_run_point(w) for w in work]
    rows = []
    for v, (_, s) in zip(grid, results):
        s["value"] = v
        rows.append(s)
    points = [analysis.SecurityPoint(r["gamma"], r["s_max"], r["gamma"] / 2.0, r["d_closed_form"])
              for r in rows]
    if "csv" in scen.formats:
        curve = scen.out_dir / "curve.csv"
        curve.parent.mkdir(parents=True, exist_ok=True)
        analysis.write_curve_csv(points, curve)
        lines = [",".join(SWEEP_COLUMNS)]
        for r in rows:
            lines.append(",".join(_csv_value(r.get(c)) for c in SWEEP_COLUMNS))
        _write(scen.out_dir / "sweep.csv", "\n".join(lines) + "\n")
    if "json" in scen.formats:
        _write(scen.out_dir / "summary.json",
               _dumps({"scenario": scen.name, "parameter": param, "points": rows}))
    return rows


def _csv_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(round(v, 12))
    return str(v)


def compare_capacity(n_runs: int, seed: int = 0) -> Dict[str, Any]:
    """Bits per EPR pair for the one-bit and two-bit encodings on a clean channel."""
    if n_runs < 1:
        raise ValueError(f"n_runs must be >= 1, got {n_runs}")
    out = {"runs": n_runs, "seed": seed}
    for label, encoding in (("legacy", "legacy"), ("improved", "dense")):
        cfg = SessionConfig(control_probability=0.0, encoding=encoding,
                            rng_seed=derive_seed(seed, 0))
        s = run_session(cfg, n_runs).summary
        out[f"{label}_bits_per_pair"] = s["bits_per_pair"]
        out[f"{label}_bit_errors"] = s["bit_errors"]
    out["ratio"] = out["improved_bits_per_pair"] / out["legacy_bits_per_pair"]
    return out


def _apply_flags(scen: Scenario, args) -> Scenario:
    if args.seed is not None:
        scen = replace(scen, seed=args.seed, session=replace(scen.session, rng_seed=derive_seed(args.seed, 0)))
    if args.runs is not None:
        scen = replace(scen, n_runs=args.runs)
    if args.out_dir is not None:
        scen = replace(scen, out_dir=Path(args.out_dir))
    if args.format is not None:
        scen = replace(scen, formats=(args.format,))
    validate(scen)
    return scen


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--format", choices=("csv", "json"), default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pingpong", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario")
    p.add_argument("config")
    _common(p)

    p = sub.add_parser("sweep", help="run a scenario over its [sweep] grid")
    p.add_argument("config")
    _common(p)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("compare-capacity", help="bits per pair, one-bit vs two-bit encoding")
    p.add_argument("--runs", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--format", choices=("csv", "json"), default="json")

    p = sub.add_parser("curve", help="write the gamma / entropy / detection curve as CSV")
    p.add_argument("--points", type=int, default=101)
    p.add_argument("--out", required=True)

    sub.add_parser("list", help="list bundled scenarios")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list":
            print("\n".join(bundled_scenarios()))
        elif args.command == "run":
            summary = run_scenario(_apply_flags(load_scenario(args.config), args))
            print(_dumps({k: summary[k] for k in SUMMARY_KEYS + ("detection_rate", "detection_stderr",
                                                                  "eve_information", "holevo_ceiling")}),
                  end="")
        elif args.command == "sweep":
            rows = run_sweep(_apply_flags(load_scenario(args.config), args), jobs=args.jobs)
            for r in rows:
                print(f"value={r['value']:.6g} gamma={r['gamma']:.6g} "
                      f"detection={r['detection_rate']:.4f}+-{r['detection_stderr']:.4f} "
                      f"closed_form={r['d_closed_form']:.4f}")
        elif args.command == "compare-capacity":
            rep = compare_capacity(args.runs, args.seed)
            if args.out_dir:
                out = Path(args.out_dir)
                if args.format == "json":
                    _write(out / "capacity.json", _dumps(rep))
                else:
                    keys = sorted(rep)
                    _write(out / "capacity.csv", ",".join(keys) + "\n" +
                           ",".join(_csv_value(rep[k]) for k in keys) + "\n")
            print(_dumps(rep), end="")
        elif args.command == "curve":
            analysis.write_curve_csv(analysis.gamma_d_curve(args.points), args.out)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (OSError, FileNotFoundError) as e:
        print(f"io error: {e}", file=sys.stderr)
        return 3
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
