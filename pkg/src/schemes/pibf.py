"""Penalty-based iterative beamforming: outer penalty escalation around an inner SCA loop."""

from __future__ import annotations

import logging
import math
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.channel.realization import ChannelRealization
from src.errors import InfeasibleError, NumericalFailure, PreconditionError
from src.network.evaluation import (
    aerial_rate,
    aerial_sinr,
    effective_noise,
    link_powers,
    merit_mu,
    penalty_F,
    satellite_interference,
    terrestrial_rates,
    transmit_powers,
)
from src.network.models import BeamformerSet, EffectiveNoise, LiftedIterate
from src.network.scenario import ScenarioConfig
from src.optim.solver import SolveOutcome, solve
from src.optim.subproblems import build_init_subproblem, build_inner_subproblem
from src.optim.surrogates import recover_rank_one, update_aux
from src.schemes.result import ConvergenceTrace, SchemeResult, score_beamformers

logger = logging.getLogger(__name__)

DELTA_STALL = 1e-9
CHAIN_TOL = 1e-6


class PibfSettings(BaseModel):
    """Tolerances and caps of the penalty loop and its initialization."""

    model_config = ConfigDict(frozen=True)

    eps1: float = Field(3e-3, gt=0, description="inner objective tolerance")
    eps2: float = Field(1e-3, gt=0, description="rank-one penalty threshold")
    t_max: int = Field(20, ge=1)
    xi0: float = Field(1e-5, gt=0)
    omega: float = 10.0
    outer_cap: int = Field(12, ge=1)
    init_cap: int = Field(20, ge=1)
    retry_step: float = Field(0.1, gt=0, le=1)

    @model_validator(mode="after")
    def _check_escalation(self) -> "PibfSettings":
        if self.omega <= 1:
            raise ValueError(f"penalty escalation factor must be > 1, got {self.omega}")
        return self


# ---------------------------------------------------------------------------
# Initialization
# ---------------------------------------------------------------------------

def random_aux(
    scenario: ScenarioConfig, noise: EffectiveNoise, n: int, rng: np.random.Generator
) -> np.ndarray:
    """Random auxiliaries, uniform on ``[0, ln(10 * max_noise / sigma^2)]`` above ``ln sigma^2``."""
    sigma2 = scenario.noise_power
    top = math.log(10.0 * max(float(noise.terminals.max()), noise.aerial) / sigma2)
    return math.log(sigma2) + rng.uniform(0.0, top, n)


def initialize(
    scenario: ScenarioConfig,
    ch: ChannelRealization,
    settings: Optional[PibfSettings] = None,
    rng: Optional[np.random.Generator] = None,
    noise: Optional[EffectiveNoise] = None,
) -> LiftedIterate:
    """Feasible starting point by repeated margin maximization.

    Raises :class:`InfeasibleError` when the margin stays negative (cap reached or margin stalled)
    or the backend declares the margin problem infeasible or unbounded.
    """
    settings = settings or PibfSettings()
    rng = rng if rng is not None else np.random.default_rng(0)
    noise = noise or effective_noise(ch, scenario.noise_power)
    with_aerial = not scenario.is_hierarchical

    draws = random_aux(scenario, noise, ch.n_terminals + 1, rng)
    u0, u0_aerial = draws[:-1], (float(draws[-1]) if with_aerial else None)
    previous: Optional[float] = None
    for t in range(1, settings.init_cap + 1):
        outcome = solve(build_init_subproblem(scenario, ch, u0, u0_aerial, noise))
        if outcome.status in ("infeasible", "unbounded"):
            raise InfeasibleError(f"initialization subproblem reported {outcome.status} at iteration {t}")
        if not outcome.ok:
            raise NumericalFailure(f"initialization subproblem ended {outcome.status} at iteration {t}")
        it = outcome.iterate
        u0, u0_aerial = update_aux(ch, it, noise, with_aerial)
        logger.debug("init t=%d delta=%.4e", t, outcome.delta)
        if outcome.delta >= 0:
            logger.info("Initialization feasible after %d iteration(s) (delta=%.3e)", t, outcome.delta)
            return it.with_aux(u0, u0_aerial)
        if previous is not None and abs(outcome.delta - previous) < DELTA_STALL:
            break
        previous = outcome.delta
    raise InfeasibleError(f"no feasible starting point (best margin {outcome.delta:.3e})")


# ---------------------------------------------------------------------------
# Rank-one recovery repair
# ---------------------------------------------------------------------------

def fit_to_budgets(scenario: ScenarioConfig, ch: ChannelRealization, bf: BeamformerSet) -> BeamformerSet:
    """Scale beams down so every power budget and the satellite cap hold exactly.

    Absorbs the solver's feasibility slack; beams already inside every limit are returned as is.
    """
    powers, aerial_power = transmit_powers(bf)
    w, v = bf.w.copy(), bf.v.copy()
    changed = False
    for n, budget in enumerate(scenario.bs_power_budgets):
        members = ch.cell_of == n
        used = float(powers[members].sum())
        if used > budget:
            w[members] *= math.sqrt(budget / used)
            changed = True
    if aerial_power > scenario.aerial_power_budget:
        v *= math.sqrt(scenario.aerial_power_budget / aerial_power)
        changed = True
    fitted = BeamformerSet(v=v, w=w)
    sat = satellite_interference(ch, fitted)
    if sat > scenario.interference_temperature:
        fitted = fitted.scaled(math.sqrt(scenario.interference_temperature / sat))
        changed = True
    if not changed:
        return bf
    logger.debug("Recovered beams scaled back inside their budgets")
    return fitted


def restore_aerial_floor(
    scenario: ScenarioConfig, ch: ChannelRealization, bf: BeamformerSet, noise: EffectiveNoise
) -> BeamformerSet:
    """Scale every terrestrial vector by the largest ``c <= 1`` that meets the aerial SINR floor.

    Returns ``bf`` unchanged when the floor already holds or cannot be met by scaling.
    """
    beta = scenario.beta_floor
    if not scenario.is_hierarchical or beta <= 0 or aerial_sinr(ch, bf, noise) >= beta:
        return bf
    p = link_powers(ch, bf)
    leak = float(p.terr_at_aerial.sum())
    room = p.aerial_signal / beta - noise.aerial
    if room <= 0 or leak <= 0:
        logger.warning("Aerial floor cannot be restored by scaling terrestrial beams")
        return bf
    c = min(1.0, math.sqrt(room / leak))
    logger.warning("Restoring aerial floor: terrestrial beams scaled by %.6f", c)
    return BeamformerSet(v=bf.v, w=bf.w * c)


# ---------------------------------------------------------------------------
# Main loop
# ---------------------------------------------------------------------------

def _solve_inner(
    scenario: ScenarioConfig,
    ch: ChannelRealization,
    anchor: LiftedIterate,
    previous: Optional[LiftedIterate],
    xi: float,
    noise: EffectiveNoise,
    settings: PibfSettings,
) -> tuple[SolveOutcome, LiftedIterate]:
    """One subproblem solve; on failure retry once from a damped anchor."""
    outcome = solve(build_inner_subproblem(scenario, ch, anchor, xi, noise))
    if outcome.ok:
        return outcome, anchor
    if previous is None:
        raise NumericalFailure(f"inner subproblem ended {outcome.status} with no anchor to fall back to")
    damped = previous.blend(anchor, settings.retry_step)
    damped = damped.with_aux(*update_aux(ch, damped, noise, not scenario.is_hierarchical))
    logger.warning("Inner subproblem %s; retrying from damped anchor", outcome.status)
    outcome = solve(build_inner_subproblem(scenario, ch, damped, xi, noise))
    if not outcome.ok:
        raise NumericalFailure(f"inner subproblem ended {outcome.status} after retry")
    return outcome, damped


def check_ascent(mu_anchor: float, phi: float, mu_next: float, outer: int = 0, inner: int = 0) -> None:
    """Require ``mu(next) >= phi >= mu(anchor)`` up to :data:`CHAIN_TOL`; raise :class:`NumericalFailure` if not."""
    if phi < mu_anchor - CHAIN_TOL or mu_next < phi - CHAIN_TOL:
        raise NumericalFailure(
            f"ascent chain broken at outer={outer} inner={inner}: "
            f"mu(anchor)={mu_anchor:.9f} phi={phi:.9f} mu(next)={mu_next:.9f}"
        )


def run_pibf(
    scenario: ScenarioConfig,
    ch: ChannelRealization,
    settings: Optional[PibfSettings] = None,
    rng: Optional[np.random.Generator] = None,
) -> SchemeResult:
    """Run the penalty loop in the scenario's mode and report vector-domain rates."""
    settings = settings or PibfSettings()
    noise = effective_noise(ch, scenario.noise_power)
    with_aerial = not scenario.is_hierarchical
    result = SchemeResult(scheme="PIBF", mode=scenario.mode, status="ok")
    trace = result.trace

    try:
        it = initialize(scenario, ch, settings, rng, noise)
    except InfeasibleError as e:
        logger.info("PIBF initialization infeasible: %s", e)
        return _finish(result, "infeasible", str(e))
    except NumericalFailure as e:
        logger.warning("PIBF initialization failed: %s", e)
        return _finish(result, "numerical_failure", str(e))

    xi = settings.xi0
    previous: Optional[LiftedIterate] = None
    F = penalty_F(it)
    try:
        for outer in range(1, settings.outer_cap + 1):
            phi_prev: Optional[float] = None
            phi = float("nan")
            for t in range(1, settings.t_max + 1):
                outcome, anchor = _solve_inner(scenario, ch, it, previous, xi, noise, settings)
                previous = anchor
                nxt = outcome.iterate
                it = nxt.with_aux(*update_aux(ch, nxt, noise, with_aerial))
                phi = outcome.objective
                F = penalty_F(it)
                mu = merit_mu(scenario, ch, it, xi, noise)
                trace.record(outer, t, phi, mu, F, xi)
                logger.debug("outer=%d t=%d phi=%.6f mu=%.6f F=%.3e xi=%.1e", outer, t, phi, mu, F, xi)
                check_ascent(merit_mu(scenario, ch, anchor, xi, noise), phi, mu, outer, t)
                if phi_prev is not None and abs(phi - phi_prev) <= settings.eps1:
                    break
                phi_prev = phi
            trace.close_outer(phi, F)
            if F < settings.eps2:
                break
            xi *= settings.omega
    except NumericalFailure as e:
        logger.warning("PIBF stopped: %s", e)
        return _finish(result, "numerical_failure", str(e))

    result.lifted_sum_rate = float(np.sum(terrestrial_rates(ch, it, noise)))
    result.lifted_aerial_rate = aerial_rate(ch, it, noise)
    if F >= settings.eps2:
        trace.converged = False
        logger.warning("PIBF did not reach rank one after %d outer iterations (F=%.3e)", trace.outer_iterations, F)
        return _finish(result, "not_converged", f"penalty {F:.3e} after outer cap")

    try:
        bf = recover_rank_one(it, settings.eps2)
    except PreconditionError as e:
        return _finish(result, "not_converged", str(e))
    bf = restore_aerial_floor(scenario, ch, fit_to_budgets(scenario, ch, bf), noise)
    _finish(result, "ok")
    return score_beamformers(result, scenario, ch, bf, noise)


def run_pibf_tcssa(
    scenario: ScenarioConfig,
    ch: ChannelRealization,
    settings: Optional[PibfSettings] = None,
    rng: Optional[np.random.Generator] = None,
) -> SchemeResult:
    """PIBF with the aerial rate in the objective and no aerial floor."""
    return run_pibf(scenario.with_updates(mode="TCSSA"), ch, settings, rng)


def _finish(result: SchemeResult, status: str, message: str = "") -> SchemeResult:
    result.status = status  # type: ignore[assignment]
    result.message = message
    result.outer_iterations = result.trace.outer_iterations
    result.inner_iterations = result.trace.inner_iterations
    return result
