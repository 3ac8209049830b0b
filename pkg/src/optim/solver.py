"""Solver contract: run a convex subproblem on a conic backend and read back its primal values."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from typing import Literal, Optional

import cvxpy as cp
import numpy as np
from dotenv import load_dotenv

from src.network.models import LiftedIterate, PowerAllocation
from src.optim.subproblems import ConvexSubproblem

load_dotenv()
logger = logging.getLogger(__name__)

DEFAULT_SOLVER = "CLARABEL"
FALLBACK_SOLVER = "SCS"
SOLVER_ACCURACY = 1e-6

Status = Literal["optimal", "infeasible", "unbounded", "numerical-failure"]

_SOLVER_OPTIONS: dict[str, dict[str, float | int]] = {
    "CLARABEL": {"tol_gap_abs": 1e-9, "tol_gap_rel": 1e-9, "tol_feas": 1e-9, "max_iter": 400},
    "SCS": {"eps_abs": 1e-7, "eps_rel": 1e-7, "max_iters": 50_000},
}


@dataclass
class SolveOutcome:
    """Status plus primal values in raw units (``u`` in nats of watts)."""

    status: Status
    objective: Optional[float] = None
    iterate: Optional[LiftedIterate] = None
    powers: Optional[PowerAllocation] = None
    u: Optional[np.ndarray] = None
    u_aerial: Optional[float] = None
    delta: Optional[float] = None
    solver: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


def solver_chain() -> list[str]:
    """Backends to try in order: ``SAGIN_SOLVER`` (default Clarabel), then SCS."""
    primary = os.getenv("SAGIN_SOLVER", DEFAULT_SOLVER).upper()
    return [primary] if primary == FALLBACK_SOLVER else [primary, FALLBACK_SOLVER]


def _run(sub: ConvexSubproblem, name: str) -> str:
    sub.problem.solve(solver=name, **_SOLVER_OPTIONS.get(name, {}))
    return sub.problem.status


def _extract(sub: ConvexSubproblem, status: Status, name: str) -> SolveOutcome:
    values = {key: var.value for key, var in sub.variables.items()}
    shift = sub.log_noise
    u = np.asarray(values["u"], dtype=float).reshape(-1) + shift if "u" in values else None
    u_aerial = float(values["u_aerial"]) + shift if "u_aerial" in values else None
    outcome = SolveOutcome(
        status=status,
        objective=float(sub.problem.value),
        u=u,
        u_aerial=u_aerial,
        delta=float(values["delta"]) if "delta" in values else None,
        solver=name,
    )
    if sub.lifted:
        n_terms = sum(1 for key in values if key.startswith("W"))
        outcome.iterate = LiftedIterate.from_solution(
            sub.to_watts("V", values["V"]),
            [sub.to_watts(f"W{j}", values[f"W{j}"]) for j in range(n_terms)],
            u=u,
            u_aerial=u_aerial,
        )
    else:
        outcome.powers = PowerAllocation(
            q=float(sub.to_watts("q", values["q"])), p=sub.to_watts("p", np.asarray(values["p"]).reshape(-1))
        )
    return outcome


def solve(sub: ConvexSubproblem) -> SolveOutcome:
    """Solve ``sub`` and map the backend status onto optimal / infeasible / unbounded / numerical-failure.

    An inaccurate answer counts as a failure of that backend; the next one in the chain is tried.
    """
    for name in solver_chain():
        try:
            status = _run(sub, name)
        except cp.SolverError as e:
            logger.warning("%s failed on %s subproblem: %s", name, sub.kind, e)
            continue
        if status == cp.OPTIMAL:
            outcome = _extract(sub, "optimal", name)
            logger.debug("%s %s: objective %.6e", name, sub.kind, outcome.objective)
            return outcome
        if status == cp.INFEASIBLE:
            logger.debug("%s reports %s subproblem infeasible", name, sub.kind)
            return SolveOutcome(status="infeasible", solver=name)
        if status == cp.UNBOUNDED:
            logger.debug("%s reports %s subproblem unbounded", name, sub.kind)
            return SolveOutcome(status="unbounded", solver=name)
        logger.warning("%s ended %s subproblem with status %s", name, sub.kind, status)
    return SolveOutcome(status="numerical-failure")
