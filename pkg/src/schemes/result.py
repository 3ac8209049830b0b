"""Per-run outputs shared by every scheme: the result record and the convergence trace."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Optional

import numpy as np
import pandas as pd

from src.channel.realization import ChannelRealization
from src.network.evaluation import (
    FeasibilityReport,
    aerial_rate,
    check_constraints,
    terrestrial_rates,
)
from src.network.models import BeamformerSet, EffectiveNoise
from src.network.scenario import ScenarioConfig

logger = logging.getLogger(__name__)

Scheme = Literal["PIBF", "IS", "ZF", "MRC"]
Status = Literal["ok", "infeasible", "numerical_failure", "not_applicable", "not_converged"]

TRACE_COLUMNS = ["outer", "inner", "phi", "mu", "F", "xi"]
NAN = float("nan")


@dataclass
class ConvergenceTrace:
    """One row per inner iteration plus the penalty reached at the end of each outer iteration."""

    rows: list[dict[str, float]] = field(default_factory=list)
    outer_penalties: list[float] = field(default_factory=list)
    outer_objectives: list[float] = field(default_factory=list)
    # False once a loop stopped on its iteration cap instead of its tolerance
    converged: bool = True

    def record(
        self, outer: int, inner: int, phi: float, mu: float = NAN, F: float = NAN, xi: float = NAN
    ) -> None:
        """Append one row; fields a loop does not track stay NaN."""
        values = (phi, mu, F, xi)
        if not math.isfinite(phi) or any(math.isinf(x) for x in values):
            logger.warning("Non-finite trace entry at outer=%d inner=%d: %s", outer, inner, values)
        self.rows.append({"outer": outer, "inner": inner, "phi": phi, "mu": mu, "F": F, "xi": xi})

    def close_outer(self, phi: float, F: float) -> None:
        self.outer_objectives.append(phi)
        self.outer_penalties.append(F)

    @property
    def inner_iterations(self) -> int:
        return len(self.rows)

    @property
    def outer_iterations(self) -> int:
        return len(self.outer_penalties)

    def inner_counts(self) -> list[int]:
        """Number of inner iterations spent in each outer iteration."""
        counts: dict[int, int] = {}
        for row in self.rows:
            counts[int(row["outer"])] = counts.get(int(row["outer"]), 0) + 1
        return [counts[k] for k in sorted(counts)]

    def phi_by_outer(self) -> dict[int, list[float]]:
        grouped: dict[int, list[float]] = {}
        for row in self.rows:
            grouped.setdefault(int(row["outer"]), []).append(row["phi"])
        return grouped

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=TRACE_COLUMNS)

    def to_csv(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False)
        return path


@dataclass
class SchemeResult:
    """Outcome of one scheme on one realization; rates in bps/Hz from the deployable vectors."""

    scheme: Scheme
    mode: str
    status: Status
    beamformers: Optional[BeamformerSet] = None
    terminal_rates: np.ndarray = field(default_factory=lambda: np.zeros(0))
    aerial_rate: float = float("nan")
    report: Optional[FeasibilityReport] = None
    lifted_sum_rate: float = float("nan")
    lifted_aerial_rate: float = float("nan")
    outer_iterations: int = 0
    inner_iterations: int = 0
    trace: ConvergenceTrace = field(default_factory=ConvergenceTrace)
    wall_time: float = 0.0
    message: str = ""

    @property
    def sum_rate(self) -> float:
        return float(np.sum(self.terminal_rates)) if self.terminal_rates.size else float("nan")

    @property
    def feasible(self) -> bool:
        return self.status == "ok" and self.report is not None and self.report.feasible

    def summary(self) -> dict[str, object]:
        return {
            "scheme": self.scheme,
            "mode": self.mode,
            "status": self.status,
            "feasible": self.feasible,
            "sum_rate": self.sum_rate,
            "aerial_rate": self.aerial_rate,
            "outer_iterations": self.outer_iterations,
            "inner_iterations": self.inner_iterations,
            "wall_time": self.wall_time,
        }


def score_beamformers(
    result: SchemeResult,
    scenario: ScenarioConfig,
    ch: ChannelRealization,
    bf: BeamformerSet,
    noise: EffectiveNoise,
) -> SchemeResult:
    """Fill rates and the feasibility report from deployable vectors."""
    result.beamformers = bf
    result.terminal_rates = terrestrial_rates(ch, bf, noise)
    result.aerial_rate = aerial_rate(ch, bf, noise)
    result.report = check_constraints(scenario, ch, bf)
    if result.status == "ok" and not result.report.feasible:
        result.status = "infeasible"
        result.message = "violated: " + ", ".join(result.report.violated)
    return result
