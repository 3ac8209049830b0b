"""Monte Carlo sweep harness: draws realizations, runs every scheme, aggregates and writes results."""

from __future__ import annotations

import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Literal, Optional

import numpy as np
import pandas as pd
import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from tqdm import tqdm

from src import __version__
from src.channel.realization import draw_realization
from src.config import RunConfig
from src.errors import ConfigError
from src.network.scenario import Mode, ScenarioConfig
from src.optim.solver import SOLVER_ACCURACY, solver_chain
from src.schemes.low_complexity import run_scheme
from src.schemes.pibf import run_pibf
from src.schemes.result import ConvergenceTrace, Scheme, SchemeResult

logger = logging.getLogger(__name__)

SweepParameter = Literal["power", "interference_temperature", "aerial_rate_floor", "is_threshold"]
ALL_SCHEMES: tuple[Scheme, ...] = ("PIBF", "IS", "ZF", "MRC")
SCHEME_CODES = {"PIBF": 101, "IS": 102, "ZF": 103, "MRC": 104}
TRACED_SCHEMES = ("PIBF", "IS", "MRC")


class SweepSpec(BaseModel):
    """One swept axis over a seeded set of trials."""

    model_config = ConfigDict(frozen=True)

    parameter: SweepParameter
    values: list[float] = Field(min_length=1)
    fixed: dict[SweepParameter, float] = Field(default_factory=dict)
    trials: int = Field(50, ge=1)
    seed: int = Field(0, ge=0)
    schemes: list[Scheme] = Field(default_factory=lambda: list(ALL_SCHEMES))
    modes: list[Mode] = Field(default_factory=lambda: ["HCSSA"])
    record_timing: bool = True
    write_traces: bool = False

    @field_validator("schemes", "modes")
    @classmethod
    def _nonempty_unique(cls, v: list[str]) -> list[str]:
        if not v:
            raise ValueError("at least one entry is required")
        if len(set(v)) != len(v):
            raise ValueError(f"duplicate entries in {v}")
        return v

    @model_validator(mode="after")
    def _check_fixed(self) -> "SweepSpec":
        if self.parameter in self.fixed:
            raise ValueError(f"{self.parameter} is swept and cannot also be fixed")
        return self


@dataclass(frozen=True)
class TrialRecord:
    value: float
    trial: int
    scheme: str
    mode: str
    status: str
    feasible: bool
    sum_rate: float
    aerial_rate: float
    outer_iterations: int
    inner_iterations: int
    wall_time: float


@dataclass
class TrialOutcome:
    record: TrialRecord
    value_index: int
    trace: Optional[ConvergenceTrace] = None


@dataclass(frozen=True)
class AggregateRow:
    """Means over feasible trials only; ``feasible_trials`` counts them."""

    value: float
    scheme: str
    mode: str
    sum_rate: float
    aerial_rate: float
    feasible_fraction: float
    feasible_trials: int
    trials: int
    outer_iterations: float
    inner_iterations: float
    wall_time: float


@dataclass
class TrialTask:
    config: RunConfig
    value: float
    value_index: int
    trial: int
    seed: int
    schemes: list[str]
    modes: list[str]
    record_timing: bool
    keep_traces: bool


@dataclass
class SweepSummary:
    rows: list[AggregateRow]
    outcomes: list[TrialOutcome]
    files: dict[str, Path] = field(default_factory=dict)

    @property
    def failures(self) -> int:
        return sum(1 for o in self.outcomes if o.record.status == "numerical_failure")


# ---------------------------------------------------------------------------
# Parameter application
# ---------------------------------------------------------------------------

def apply_parameter(config: RunConfig, name: str, value: float) -> RunConfig:
    """Copy of ``config`` with one sweep axis set."""
    scenario = config.scenario
    if name == "power":
        return config.model_copy(update={"scenario": scenario.with_power(value)})
    if name == "interference_temperature":
        return config.model_copy(update={"scenario": scenario.with_updates(interference_temperature_mw=value)})
    if name == "aerial_rate_floor":
        return config.model_copy(update={"scenario": scenario.with_updates(aerial_rate_floor=value)})
    if name == "is_threshold":
        settings = config.interference_suppression.model_validate(
            {**config.interference_suppression.model_dump(), "chi": value}
        )
        return config.model_copy(update={"interference_suppression": settings})
    raise ConfigError(f"unknown sweep parameter {name!r}")


def resolve_config(spec: SweepSpec, config: RunConfig) -> RunConfig:
    """Apply the sweep's fixed values; validation errors become :class:`ConfigError`."""
    try:
        for name, value in spec.fixed.items():
            config = apply_parameter(config, name, value)
        for value in spec.values:
            apply_parameter(config, spec.parameter, value)
    except ValueError as e:
        raise ConfigError(f"sweep {spec.parameter} produces an invalid configuration: {e}") from e
    return config


# ---------------------------------------------------------------------------
# Trials
# ---------------------------------------------------------------------------

def scheme_rng(seed: int, trial: int, scheme: str) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, trial, SCHEME_CODES[scheme]])))


def _run_one(scheme: str, config: RunConfig, ch: Any, seed: int, trial: int) -> SchemeResult:
    rng = scheme_rng(seed, trial, scheme)
    if scheme == "PIBF":
        return run_pibf(config.scenario, ch, config.pibf, rng)
    return run_scheme(scheme, config.scenario, ch, config.interference_suppression, rng)  # type: ignore[arg-type]


def run_trial(task: TrialTask) -> list[TrialOutcome]:
    """All requested schemes and modes on the realization of one (seed, trial)."""
    config = task.config
    ch = draw_realization([task.seed, task.trial], config.scenario)
    outcomes: list[TrialOutcome] = []
    for mode in task.modes:
        moded = config.model_copy(update={"scenario": config.scenario.with_updates(mode=mode)})
        for scheme in task.schemes:
            start = time.perf_counter()
            try:
                result = _run_one(scheme, moded, ch, task.seed, task.trial)
            except Exception:
                logger.exception("%s/%s failed on trial %d", scheme, mode, task.trial)
                result = SchemeResult(scheme=scheme, mode=mode, status="numerical_failure")  # type: ignore[arg-type]
            elapsed = time.perf_counter() - start if task.record_timing else 0.0
            record = TrialRecord(
                value=task.value,
                trial=task.trial,
                scheme=scheme,
                mode=mode,
                status=result.status,
                feasible=result.feasible,
                sum_rate=result.sum_rate,
                aerial_rate=result.aerial_rate,
                outer_iterations=result.outer_iterations,
                inner_iterations=result.inner_iterations,
                wall_time=elapsed,
            )
            trace = result.trace if task.keep_traces and scheme in TRACED_SCHEMES else None
            outcomes.append(TrialOutcome(record=record, value_index=task.value_index, trace=trace))
    return outcomes


def _tasks(spec: SweepSpec, config: RunConfig) -> list[TrialTask]:
    return [
        TrialTask(
            config=apply_parameter(config, spec.parameter, value),
            value=value,
            value_index=i,
            trial=trial,
            seed=spec.seed,
            schemes=list(spec.schemes),
            modes=list(spec.modes),
            record_timing=spec.record_timing,
            keep_traces=spec.write_traces,
        )
        for i, value in enumerate(spec.values)
        for trial in range(spec.trials)
    ]


def _canonical_order(outcomes: list[TrialOutcome], spec: SweepSpec) -> list[TrialOutcome]:
    modes = {m: i for i, m in enumerate(spec.modes)}
    schemes = {s: i for i, s in enumerate(spec.schemes)}
    return sorted(
        outcomes,
        key=lambda o: (o.value_index, o.record.trial, modes[o.record.mode], schemes[o.record.scheme]),
    )


def execute_trials(
    spec: SweepSpec, config: RunConfig, workers: int = 1, quiet: bool = False
) -> list[TrialOutcome]:
    """Run every (value, trial) task, in a process pool when ``workers > 1``."""
    tasks = _tasks(spec, config)
    disable = quiet or not sys.stderr.isatty()
    outcomes: list[TrialOutcome] = []
    with tqdm(total=len(tasks), desc=f"sweep {spec.parameter}", disable=disable) as bar:
        if workers <= 1:
            for task in tasks:
                outcomes.extend(run_trial(task))
                bar.update(1)
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for batch in pool.map(run_trial, tasks):
                    outcomes.extend(batch)
                    bar.update(1)
    return _canonical_order(outcomes, spec)


# ---------------------------------------------------------------------------
# Aggregation and output
# ---------------------------------------------------------------------------

def records_frame(outcomes: list[TrialOutcome]) -> pd.DataFrame:
    columns = [f.name for f in fields(TrialRecord)]
    return pd.DataFrame([asdict(o.record) for o in outcomes], columns=columns)


def aggregate(outcomes: list[TrialOutcome]) -> list[AggregateRow]:
    """One row per (value, scheme, mode), in first-appearance order."""
    groups: dict[tuple[float, str, str], list[TrialRecord]] = {}
    for outcome in outcomes:
        r = outcome.record
        groups.setdefault((r.value, r.scheme, r.mode), []).append(r)

    def mean(values: list[float]) -> float:
        return float(np.mean(values)) if values else math.nan

    rows = []
    for (value, scheme, mode), records in groups.items():
        ok = [r for r in records if r.feasible]
        rows.append(
            AggregateRow(
                value=value,
                scheme=scheme,
                mode=mode,
                sum_rate=mean([r.sum_rate for r in ok]),
                aerial_rate=mean([r.aerial_rate for r in ok]),
                feasible_fraction=len(ok) / len(records),
                feasible_trials=len(ok),
                trials=len(records),
                outer_iterations=mean([r.outer_iterations for r in ok]),
                inner_iterations=mean([r.inner_iterations for r in ok]),
                wall_time=mean([r.wall_time for r in ok]),
            )
        )
    return rows


def run_sweep(
    spec: SweepSpec,
    base: ScenarioConfig,
    settings: Optional[RunConfig] = None,
    workers: int = 1,
) -> list[AggregateRow]:
    """Aggregated rows of a sweep around ``base``; deterministic for a fixed spec."""
    config = (settings or RunConfig()).model_copy(update={"scenario": base})
    config = resolve_config(spec, config)
    return aggregate(execute_trials(spec, config, workers, quiet=True))


def run_metadata(spec: SweepSpec, config: RunConfig) -> dict[str, Any]:
    """Resolved configuration, seeds and tolerances; contains nothing time-dependent."""
    return {
        "software": {"name": "sagin-beamforming", "version": __version__},
        "seed": spec.seed,
        "sweep": spec.model_dump(mode="json"),
        "scenario": config.scenario.model_dump(mode="json"),
        "pibf": config.pibf.model_dump(mode="json"),
        "is": config.interference_suppression.model_dump(mode="json"),
        "solver": {"chain": solver_chain(), "accuracy": SOLVER_ACCURACY},
    }


def ensure_writable(path: Path) -> Path:
    """Create ``path`` and prove it accepts files before any computation starts."""
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
        marker = path / ".write_check"
        marker.write_text("", encoding="utf-8")
        marker.unlink()
    except OSError as e:
        raise ConfigError(f"output directory {path} is not writable: {e}") from e
    return path


def emit_results(
    rows: list[AggregateRow],
    outcomes: list[TrialOutcome],
    path: Path,
    metadata: Optional[dict[str, Any]] = None,
) -> dict[str, Path]:
    """Write aggregates.csv, trials.csv, traces/*.csv (when kept) and metadata.yaml."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    files: dict[str, Path] = {}

    columns = [f.name for f in fields(AggregateRow)]
    files["aggregates"] = path / "aggregates.csv"
    pd.DataFrame([asdict(r) for r in rows], columns=columns).to_csv(
        files["aggregates"], index=False
    )
    files["trials"] = path / "trials.csv"
    records_frame(outcomes).to_csv(files["trials"], index=False)

    traced = [o for o in outcomes if o.trace is not None and o.trace.rows]
    for o in traced:
        r = o.record
        name = f"{r.scheme}_{r.mode}_v{o.value_index}_t{r.trial}.csv"
        o.trace.to_csv(path / "traces" / name)
    if traced:
        files["traces"] = path / "traces"

    if metadata is not None:
        files["metadata"] = path / "metadata.yaml"
        with open(files["metadata"], "w", encoding="utf-8") as f:
            yaml.safe_dump(metadata, f, sort_keys=False, allow_unicode=True)
    logger.info("Wrote %d aggregate rows and %d trial records to %s", len(rows), len(outcomes), path)
    return files


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------

class SweepPipeline:
    """Orchestrates one sweep: pre-flight, trials, aggregation, output."""

    def __init__(
        self,
        spec: SweepSpec,
        config: RunConfig,
        out_dir: Path,
        workers: int = 1,
        quiet: bool = False,
    ) -> None:
        self.spec = spec
        self.config = resolve_config(spec, config)
        self.out_dir = Path(out_dir)
        self.workers = workers
        self.quiet = quiet

    # ------------------------------------------------------------------
    # Step 0 : Pre-flight
    # ------------------------------------------------------------------

    def step_preflight(self) -> None:
        logger.info("=== Step 0: Pre-flight ===")
        ensure_writable(self.out_dir)
        logger.info(
            "Sweep %s over %d value(s) x %d trial(s); schemes %s; modes %s",
            self.spec.parameter, len(self.spec.values), self.spec.trials,
            ",".join(self.spec.schemes), ",".join(self.spec.modes),
        )

    # ------------------------------------------------------------------
    # Step 1 : Trials
    # ------------------------------------------------------------------

    def step_trials(self) -> list[TrialOutcome]:
        logger.info("=== Step 1: Trials ===")
        outcomes = execute_trials(self.spec, self.config, self.workers, self.quiet)
        failed = sum(1 for o in outcomes if o.record.status == "numerical_failure")
        logger.info("Finished %d scheme runs (%d numerical failures).", len(outcomes), failed)
        return outcomes

    # ------------------------------------------------------------------
    # Step 2 : Aggregation
    # ------------------------------------------------------------------

    def step_aggregate(self, outcomes: list[TrialOutcome]) -> list[AggregateRow]:
        logger.info("=== Step 2: Aggregation ===")
        rows = aggregate(outcomes)
        for row in rows:
            logger.info(
                "%s=%g %s/%s: sum rate %.3f bps/Hz, aerial %.3f bps/Hz, feasible %d/%d",
                self.spec.parameter, row.value, row.scheme, row.mode,
                row.sum_rate, row.aerial_rate, row.feasible_trials, row.trials,
            )
        return rows

    # ------------------------------------------------------------------
    # Step 3 : Output
    # ------------------------------------------------------------------

    def step_emit(self, rows: list[AggregateRow], outcomes: list[TrialOutcome]) -> dict[str, Path]:
        logger.info("=== Step 3: Output ===")
        return emit_results(rows, outcomes, self.out_dir, run_metadata(self.spec, self.config))

    # ------------------------------------------------------------------
    # Full run
    # ------------------------------------------------------------------

    def run_all(self) -> SweepSummary:
        logger.info("======== Sweep %s START ========", self.spec.parameter)
        self.step_preflight()
        outcomes = self.step_trials()
        rows = self.step_aggregate(outcomes)
        summary = SweepSummary(rows=rows, outcomes=outcomes, files=self.step_emit(rows, outcomes))
        logger.info("======== Sweep %s COMPLETE ========", self.spec.parameter)
        return summary
