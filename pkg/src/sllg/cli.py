"""Command-line entry point: ``sllg <command> [--config FILE] [overrides]``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 a requested acceptance check failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from .config import OUTPUT_ROOT_ENV, RunConfig
from .errors import ConfigError, InvariantTrackingError, PreconditionError, TopologyObstructionError
from . import experiments as ex

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_CHECK = 4

# flag -> config key
_SHORTCUTS = {
    "dim": "grid.dim",
    "n": "grid.n",
    "cutoff": "grid.cutoff",
    "T": "time.T",
    "steps": "time.steps",
    "stride": "time.snapshot_stride",
    "lam": "model.lam",
    "eps": "model.eps",
    "noise": "model.noise",
    "scheme": "scheme.name",
    "seed": "run.seed",
    "output": "run.output_dir",
    "initial": "initial.kind",
}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI run configuration")
    p.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config key, e.g. model.lam=0.5 or initial.R=0.25",
    )
    for flag in _SHORTCUTS:
        p.add_argument(f"--{flag}", dest=f"opt_{flag}", default=None)
    p.add_argument("--renormalize", dest="opt_renormalize", action="store_const", const="true")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sllg",
        description="Spectral Galerkin simulator for the regularized stochastic LLG equation.",
        epilog=f"Relative output directories are resolved under ${OUTPUT_ROOT_ENV} when set.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one trajectory, write snapshots and diagnostics")
    _common(p)

    p = sub.add_parser("uniqueness", help="compare Galerkin cutoffs on one Brownian path")
    _common(p)
    p.add_argument("--cutoffs", default="16,64,144", help="comma-separated radii squared")
    p.add_argument("--min-factor", type=float, default=None, help="fail (exit 4) if a decay ratio is below this")

    p = sub.add_parser("converge", help="time-step refinement on one path")
    _common(p)
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--min-order", type=float, default=None)

    p = sub.add_parser("scheme-check", help="Heun against corrected Euler")
    _common(p)
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds to average")
    p.add_argument("--min-slope", type=float, default=None)

    p = sub.add_parser("topology", help="track the degree (2D) or Hopf invariant (3D)")
    _common(p)
    p.add_argument("--track-stride", type=int, default=1, help="evaluate every k-th snapshot")
    p.add_argument("--drift-tolerance", type=float, default=1e-2)
    p.add_argument("--require-certified", action="store_true")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig.load(args.config) if args.config else RunConfig()
    overrides = {}
    for flag, key in _SHORTCUTS.items():
        v = getattr(args, f"opt_{flag}")
        if v is not None:
            overrides[key] = v
    if args.opt_renormalize:
        overrides["scheme.renormalize"] = "true"
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = value.strip()
    return config.with_overrides(overrides) if overrides else config


def _finish(report: dict, config: RunConfig, name: str) -> None:
    out = config.resolved_output_dir()
    out.mkdir(parents=True, exist_ok=True)
    ex.dump_report(report, out / name)
    summary = {k: v for k, v in report.items() if k not in ("config", "times", "values")}
    print(json.dumps(summary, default=ex._jsonable, sort_keys=True))


def _run(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    cmd = args.command
    if cmd == "simulate":
        report = ex.simulate(config)
        print(json.dumps({k: report[k] for k in ("snapshots", "final_time", "max_l2_ratio")}))
        return EXIT_OK
    if cmd == "uniqueness":
        try:
            cutoffs = [float(c) for c in args.cutoffs.split(",") if c.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad --cutoffs: {exc}") from exc
        report = ex.uniqueness(config, cutoffs, jobs=args.jobs)
        _finish(report, config, "uniqueness.json")
        ok = report["reproducible"]
        if args.min_factor is not None:
            ok = ok and all(r >= args.min_factor for r in report["ratios"])
        return EXIT_OK if ok else EXIT_CHECK
    if cmd == "converge":
        report = ex.converge(config, args.levels)
        _finish(report, config, "converge.json")
        if args.min_order is not None and report["order"] < args.min_order:
            return EXIT_CHECK
        return EXIT_OK
    if cmd == "scheme-check":
        report = ex.scheme_check(config, args.levels, args.seeds, jobs=args.jobs)
        _finish(report, config, "scheme_check.json")
        if args.min_slope is not None and report["slope"] < args.min_slope:
            return EXIT_CHECK
        return EXIT_OK
    report = ex.topology(config, args.track_stride, args.drift_tolerance)
    _finish(report, config, "topology.json")
    if args.require_certified and not report["certified"]:
        return EXIT_CHECK
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _run(args)
    except TopologyObstructionError as exc:
        print(f"topology obstruction: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, PreconditionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, InvariantTrackingError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
