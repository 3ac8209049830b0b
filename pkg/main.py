#!/usr/bin/env python3
"""Command-line entry point for the spectrum-sharing beamforming simulator."""

from __future__ import annotations

import argparse
import logging
import sys
from collections import Counter
from pathlib import Path
from typing import Any

from src.errors import ConfigError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2

logger = logging.getLogger("main")


def _modes(value: str) -> list[str]:
    return ["HCSSA", "TCSSA"] if value == "both" else [value]


def _schemes(value: str | None) -> list[str] | None:
    return [s.strip().upper() for s in value.split(",") if s.strip()] if value else None


def _build_spec(args: argparse.Namespace) -> "SweepSpec":  # noqa: F821
    from pydantic import ValidationError

    from src.config import load_sweep_presets
    from src.pipeline import SweepSpec

    presets = load_sweep_presets(Path(args.sweeps))
    if args.sweep not in presets:
        raise ConfigError(f"unknown sweep {args.sweep!r}; available: {', '.join(sorted(presets))}")
    data: dict[str, Any] = dict(presets[args.sweep])
    overrides = {
        "seed": args.seed,
        "trials": args.trials,
        "schemes": _schemes(args.schemes),
        "modes": _modes(args.mode) if args.mode else None,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    if args.no_timing:
        data["record_timing"] = False
    if args.traces:
        data["write_traces"] = True
    try:
        return SweepSpec.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid sweep {args.sweep!r}:\n{e}") from e


def cmd_run(args: argparse.Namespace) -> int:
    """Run a preset sweep and write CSV/YAML outputs."""
    from src.config import load_config, output_root, worker_count
    from src.pipeline import SweepPipeline

    config = load_config(Path(args.config))
    spec = _build_spec(args)
    out_dir = Path(args.out) if args.out else output_root() / args.sweep
    workers = args.workers or worker_count()
    summary = SweepPipeline(spec, config, out_dir, workers=workers, quiet=args.quiet).run_all()

    print(f"\n======== Sweep {args.sweep} ({spec.parameter}) ========\n")
    for row in summary.rows:
        print(
            f"  {row.value:>10g}  {row.scheme:<4} {row.mode:<5}  "
            f"sum {row.sum_rate:7.3f}  aerial {row.aerial_rate:7.3f}  "
            f"feasible {row.feasible_trials}/{row.trials}"
        )
    print(f"\n  Results: {out_dir}\n")
    return EXIT_NUMERICAL if summary.failures else EXIT_OK


def cmd_trial(args: argparse.Namespace) -> int:
    """Run every scheme on one realization and keep the full convergence traces."""
    from src.config import load_config, output_root
    from src.pipeline import (
        ALL_SCHEMES,
        TrialTask,
        aggregate,
        emit_results,
        ensure_writable,
        run_trial,
    )

    config = load_config(Path(args.config))
    out_dir = ensure_writable(Path(args.out) if args.out else output_root() / f"trial_{args.seed}_{args.index}")
    task = TrialTask(
        config=config,
        value=config.scenario.aerial_power_budget,
        value_index=0,
        trial=args.index,
        seed=args.seed,
        schemes=_schemes(args.schemes) or list(ALL_SCHEMES),
        modes=_modes(args.mode or "HCSSA"),
        record_timing=not args.no_timing,
        keep_traces=True,
    )
    outcomes = run_trial(task)
    emit_results(aggregate(outcomes), outcomes, out_dir)

    print(f"\n======== Trial seed={args.seed} index={args.index} ========\n")
    for o in outcomes:
        r = o.record
        print(
            f"  {r.scheme:<4} {r.mode:<5}  {r.status:<17}  sum {r.sum_rate:7.3f}  "
            f"aerial {r.aerial_rate:7.3f}  iterations {r.outer_iterations}/{r.inner_iterations}"
        )
    print(f"\n  Traces: {out_dir / 'traces'}\n")
    failed = any(o.record.status == "numerical_failure" for o in outcomes)
    return EXIT_NUMERICAL if failed else EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    """Run the invariant suite on seeded random instances."""
    from src.checks import run_checks
    from src.config import load_config

    config = load_config(Path(args.config))
    results = run_checks(config, instances=args.trials or 10, seed=args.seed or 0)
    passed = Counter(r.name for r in results if r.passed)
    total = Counter(r.name for r in results)

    print("\n======== Invariant checks ========\n")
    for name, count in total.items():
        mark = "ok" if passed[name] == count else "FAIL"
        print(f"  {name:<28} {passed[name]:>3}/{count:<3} {mark}")
    print()
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERICAL


def main(argv: list[str] | None = None) -> int:
    from src.config import SCENARIO_PATH, SWEEPS_PATH

    parser = argparse.ArgumentParser(
        prog="sagin-beamforming",
        description="Cognitive spectrum-sharing beamforming for satellite/aerial/terrestrial networks",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Enable debug logging")
    parser.add_argument("-q", "--quiet", action="store_true", help="Hide progress bars")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=str(SCENARIO_PATH), help="Scenario YAML file")
    common.add_argument("--seed", type=int, default=None, help="Master seed")
    common.add_argument("--schemes", default=None, help="Comma-separated subset of PIBF,IS,ZF,MRC")
    common.add_argument("--mode", choices=["HCSSA", "TCSSA", "both"], default=None)
    common.add_argument("--out", default=None, help="Output directory")
    common.add_argument("--trials", type=int, default=None, help="Trial (or instance) count")
    common.add_argument("--no-timing", action="store_true", help="Write 0.0 wall times for byte-stable output")

    sub = parser.add_subparsers(dest="command")

    p_run = sub.add_parser("run", parents=[common], help="Run a sweep preset")
    p_run.add_argument("--sweep", default="power", help="Preset name in the sweeps file")
    p_run.add_argument("--sweeps", default=str(SWEEPS_PATH), help="Sweep presets YAML file")
    p_run.add_argument("--workers", type=int, default=None, help="Process pool size")
    p_run.add_argument("--traces", action="store_true", help="Write per-run convergence traces")

    p_trial = sub.add_parser("trial", parents=[common], help="Run all schemes on one realization")
    p_trial.add_argument("--index", type=int, default=0, help="Trial index of the realization")

    sub.add_parser("check", parents=[common], help="Run the invariant suite")

    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )

    commands = {"run": cmd_run, "trial": cmd_trial, "check": cmd_check}
    if args.command not in commands:
        parser.print_help()
        return EXIT_CONFIG
    if args.command == "trial" and args.seed is None:
        args.seed = 0

    try:
        return commands[args.command](args)
    except ConfigError as e:
        logger.error("%s", e)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
