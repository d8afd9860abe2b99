"""
Command-line entry point.

    snnreach run <config.yaml> [--seed N] [--out-dir DIR] [--ablate facilitation|psi|both]
    snnreach sweep <config.yaml> [--seed N] [--out-dir DIR]
    snnreach calibrate <plant.yaml>
    snnreach metrics <trace.csv> [--joint J] [--source end-effector|joint] [--smoothing-ms S]

Exit codes: 0 success, 1 I/O failure, 2 invalid config or arguments,
3 integration fault during simulation.
"""

from __future__ import annotations

import argparse
import csv
import sys
from typing import Optional, Sequence

import yaml

from . import __version__
from .experiments import (
    OUT_DIR_ENV,
    SUMMARY_COLUMNS,
    ConfigError,
    MetricsSpec,
    SimulationError,
    load_config,
    load_plant_config,
    read_trace_csv,
    run_experiment,
    schedule_from_trace,
    trial_metrics,
)
from .metrics import NotSettled
from .plant import CalibrationError, calibrate_torque_increment

EXIT_IO, EXIT_CONFIG, EXIT_SIM = 1, 2, 3
ABLATE = {"facilitation": (True, False), "psi": (False, True), "both": (True, True)}


def _overrides(path: str, seed: Optional[int], ablate: Optional[str]) -> dict:
    over: dict = {}
    if seed is not None:
        over["seed"] = seed
        try:
            with open(path) as fh:
                raw = yaml.safe_load(fh)
        except (OSError, yaml.YAMLError):
            raw = None  # load_config reports the problem with context
        if isinstance(raw, dict) and isinstance(raw.get("random_goals"), dict):
            over["random_goals"] = {"seed": seed}
    if ablate is not None:
        fac, psi = ABLATE[ablate]
        over["controller"] = {"ablate": {"facilitation": fac, "psi": psi}}
    return over


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, NotSettled):
        return "not_settled"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _print_rows(rows):
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for row in rows:
        w.writerow([_cell(row.get(c)) for c in SUMMARY_COLUMNS])


def _run(args, sweep: bool) -> int:
    config = load_config(args.config, _overrides(args.config, args.seed, getattr(args, "ablate", None)))
    if sweep and config.kind not in ("ablation_sweep", "param_sweep", "pid_compare"):
        raise ConfigError(f"'sweep' runs multi-trial experiments; {config.kind} is a single trial (use 'run')",
                          ("experiment",), source=args.config)
    result = run_experiment(config, args.out_dir)
    for name, path in result.trace_paths.items():
        print(f"# trace {name}: {path}", file=sys.stderr)
    print(f"# summary: {result.summary_path}", file=sys.stderr)
    _print_rows(result.summary_rows)
    return 0


def _calibrate(args) -> int:
    req = load_plant_config(args.plant_config)
    p = req.plant
    cal = calibrate_torque_increment(p.two_link, req.delta_theta, posture=p.initial_q,
                                     control_period=p.calibration_period_s, settle_time=p.calibration_settle_s)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["joint", "delta_theta", "nominal_torque", "achieved"])
    for j in range(len(cal.nominal_torque)):
        w.writerow([j, repr(float(cal.delta_theta[j])), repr(float(cal.nominal_torque[j])),
                    repr(float(cal.achieved[j]))])
    return 0


def _metrics(args) -> int:
    trace = read_trace_csv(args.trace)
    if not 0 <= args.joint < trace.n_joints:
        raise ConfigError(f"--joint must be in [0, {trace.n_joints})", source=args.trace)
    spec = MetricsSpec(args.joint, args.smoothing_ms, args.source)
    rows = [{"trial": args.trace, "controller": "", "plant": "", **r}
            for r in trial_metrics(trace, schedule_from_trace(trace), spec)]
    _print_rows(rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="snnreach", description="Spiking reach-controller experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="experiment YAML file")
        p.add_argument("--seed", type=int, help="override the config seed (random goal schedules)")
        p.add_argument("--out-dir", help=f"output directory (default: ${OUT_DIR_ENV}, then output.dir)")

    p = sub.add_parser("run", help="run an experiment config")
    common(p)
    p.add_argument("--ablate", choices=sorted(ABLATE), help="disable facilitation, PSI, or both")
    p.set_defaults(func=lambda a: _run(a, sweep=False))

    p = sub.add_parser("sweep", help="run a multi-trial experiment (ablation, parameter sweep, PID comparison)")
    common(p)
    p.set_defaults(func=lambda a: _run(a, sweep=True))

    p = sub.add_parser("calibrate", help="torque per motor spike for the two-link arm")
    p.add_argument("plant_config", help="plant YAML file")
    p.set_defaults(func=_calibrate)

    p = sub.add_parser("metrics", help="step and smoothness metrics of a trace CSV")
    p.add_argument("trace", help="trace CSV written by run/sweep")
    p.add_argument("--joint", type=int, default=0)
    p.add_argument("--source", choices=("end-effector", "joint"), default="end-effector")
    p.add_argument("--smoothing-ms", type=float, default=None)
    p.set_defaults(func=_metrics)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CalibrationError as exc:
        print(f"error: calibration failed: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SIM
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
