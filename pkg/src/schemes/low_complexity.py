"""Two-step schemes: fixed unit directions (IS, ZF or MRC), then convex power allocation."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field

from src.channel.realization import ChannelRealization
from src.errors import InfeasibleError, InvalidArgumentError, NotApplicableError, NumericalFailure
from src.network.evaluation import effective_noise, satellite_interference
from src.network.models import EffectiveNoise, NormalizedBeamformers, PowerAllocation, canonical_phase
from src.network.scenario import ScenarioConfig
from src.optim.solver import solve
from src.optim.subproblems import (
    build_power_init_subproblem,
    build_power_subproblem,
    build_zf_power_subproblem,
    zf_coefficients,
)
from src.optim.surrogates import update_aux
from src.schemes.pibf import random_aux
from src.schemes.result import ConvergenceTrace, SchemeResult, score_beamformers

logger = logging.getLogger(__name__)

LowComplexityScheme = Literal["IS", "ZF", "MRC"]

SINGULAR_JITTER = 1e-12
NULLING_TOL = 1e-10
RHO_ROUNDOFF = 1e-9


class IsSettings(BaseModel):
    """Interference-suppression and power-allocation settings."""

    model_config = ConfigDict(frozen=True)

    chi: float = Field(1e-16, gt=0, description="interference threshold (W)")
    eps3: float = Field(1e-18, gt=0)
    eps4: float = Field(1e-2, gt=0)
    direction_cap: int = Field(200, ge=1)
    sca_cap: int = Field(20, ge=1)
    init_cap: int = Field(20, ge=1)


@dataclass(frozen=True)
class IsDirection:
    vector: np.ndarray
    psi: float
    rho: float
    iterations: int


# ---------------------------------------------------------------------------
# Step 1: directions
# ---------------------------------------------------------------------------

def _generalized_top(H: np.ndarray, B: np.ndarray) -> tuple[float, np.ndarray]:
    try:
        values, vectors = scipy.linalg.eigh(H, B)
    except np.linalg.LinAlgError as e:
        raise NumericalFailure(f"shifted interference matrix is not positive definite: {e}") from e
    idx = int(np.argmax(values))
    x = vectors[:, idx]
    return float(values[idx]), canonical_phase(x / np.linalg.norm(x))


def is_direction(
    H: np.ndarray,
    D: np.ndarray,
    chi: float,
    eps3: float = 1e-18,
    max_iter: int = 200,
) -> IsDirection:
    """Unit vector maximizing ``w^H H w`` subject to ``w^H D w <= chi``.

    Alternates the generalized eigenvector of ``(H, D/chi + rho I)`` with the equality update
    ``rho = 1 - w^H D w / chi`` until the generalized eigenvalue ``psi`` settles. Without
    interference ``(D = 0)`` one pass returns the top eigenvector of ``H`` with ``rho = 1``.
    """
    if chi <= 0:
        raise InvalidArgumentError(f"interference threshold must be > 0, got {chi}")
    H = np.asarray(H, dtype=complex)
    D = np.asarray(D, dtype=complex)
    if not np.any(H):
        raise InvalidArgumentError("desired-signal Gram matrix is zero")
    eye = np.eye(H.shape[0])
    if not np.any(D):
        psi, w = _generalized_top(H, eye)
        return IsDirection(vector=w, psi=psi, rho=1.0, iterations=1)
    rho = 0.0
    psi, w = _generalized_top(H, D / chi + SINGULAR_JITTER * eye)
    for t in range(1, max_iter + 1):
        raw = 1.0 - float(np.real(np.vdot(w, D @ w))) / chi
        rho = min(max(raw, 0.0), 1.0)
        if raw < -RHO_ROUNDOFF or raw > 1.0 + RHO_ROUNDOFF:
            logger.warning("rho update %.3e left [0, 1]; clamped to %.1f", raw, rho)
        elif rho != raw:
            logger.debug("rho update %.3e clamped to %.1f (round-off)", raw, rho)
        shift = rho if rho > 0 else SINGULAR_JITTER
        psi_next, w = _generalized_top(H, D / chi + shift * eye)
        if abs(psi_next - psi) <= eps3:
            psi = psi_next
            break
        psi = psi_next
    else:
        raise NumericalFailure(f"interference-suppression direction did not settle in {max_iter} iterations")
    leak = float(np.real(np.vdot(w, D @ w)))
    if leak > chi * (1.0 + 1e-6):
        raise NumericalFailure(f"direction leaks {leak:.3e} above threshold {chi:.3e}")
    return IsDirection(vector=w, psi=psi, rho=rho, iterations=t)


def _outer(h: np.ndarray) -> np.ndarray:
    return np.outer(h, h.conj())


def is_step1(scenario: ScenarioConfig, ch: ChannelRealization, settings: Optional[IsSettings] = None) -> NormalizedBeamformers:
    settings = settings or IsSettings()
    directions = []
    for j in range(ch.n_terminals):
        n = int(ch.cell_of[j])
        D = _outer(ch.h_aer[n]) + sum(
            (_outer(ch.h_ter[n, i]) for i in range(ch.n_terminals) if i != j),
            np.zeros((scenario.antennas_ground,) * 2, dtype=complex),
        )
        directions.append(
            is_direction(_outer(ch.direct(j)), D, settings.chi, settings.eps3, settings.direction_cap).vector
        )
    D_aerial = sum(_outer(g) for g in ch.g_ter)
    v = is_direction(_outer(ch.g_aer), D_aerial, settings.chi, settings.eps3, settings.direction_cap).vector
    logger.debug("IS step 1 designed %d terrestrial directions", len(directions))
    return NormalizedBeamformers(v=v, w=np.stack(directions))


def null_space_direction(T: np.ndarray, h: np.ndarray) -> np.ndarray:
    """``(I - T T^+) h`` normalized: the component of ``h`` orthogonal to every column of ``T``."""
    T = np.atleast_2d(np.asarray(T, dtype=complex))
    h = np.asarray(h, dtype=complex)
    if T.shape[0] != h.size:
        raise InvalidArgumentError(f"interference matrix has {T.shape[0]} rows for a {h.size}-vector")
    coef, _, rank, _ = scipy.linalg.lstsq(T, h)
    if rank < T.shape[1]:
        raise NotApplicableError(f"interference matrix rank {rank} < {T.shape[1]} columns")
    residual = h - T @ coef
    norm = np.linalg.norm(residual)
    if norm <= NULLING_TOL * max(np.linalg.norm(h), 1e-300):
        raise NotApplicableError("desired channel lies in the interference span")
    return residual / norm


def zf_step1(scenario: ScenarioConfig, ch: ChannelRealization) -> NormalizedBeamformers:
    K = ch.n_terminals
    if K >= min(scenario.antennas_ground, scenario.antennas_aerial):
        raise NotApplicableError(
            f"zero forcing needs more antennas than terminals (K={K}, M_G={scenario.antennas_ground}, "
            f"M_A={scenario.antennas_aerial})"
        )
    directions = []
    for j in range(K):
        n = int(ch.cell_of[j])
        columns = [ch.h_ter[n, i] for i in range(K) if i != j] + [ch.h_aer[n]]
        directions.append(null_space_direction(np.stack(columns, axis=1), ch.direct(j)))
    v = null_space_direction(ch.g_ter.T, ch.g_aer)
    return NormalizedBeamformers(v=v, w=np.stack(directions))


def mrc_step1(scenario: ScenarioConfig, ch: ChannelRealization) -> NormalizedBeamformers:
    def matched(h: np.ndarray) -> np.ndarray:
        norm = np.linalg.norm(h)
        if norm == 0:
            raise InvalidArgumentError("matched filter needs a nonzero channel")
        return h / norm

    return NormalizedBeamformers(
        v=matched(ch.g_aer), w=np.stack([matched(ch.direct(j)) for j in range(ch.n_terminals)])
    )


# ---------------------------------------------------------------------------
# Step 2: powers
# ---------------------------------------------------------------------------

def _initial_powers(
    scenario: ScenarioConfig,
    ch: ChannelRealization,
    nb: NormalizedBeamformers,
    noise: EffectiveNoise,
    settings: IsSettings,
    rng: np.random.Generator,
) -> PowerAllocation:
    """Feasible starting powers from the scalar margin-maximization pass."""
    with_aerial = not scenario.is_hierarchical
    draws = random_aux(scenario, noise, ch.n_terminals + 1, rng)
    u0, u0_aerial = draws[:-1], (float(draws[-1]) if with_aerial else None)
    previous: Optional[float] = None
    for t in range(1, settings.init_cap + 1):
        outcome = solve(build_power_init_subproblem(scenario, ch, nb, u0, u0_aerial, noise))
        if outcome.status in ("infeasible", "unbounded"):
            raise InfeasibleError(f"power initialization reported {outcome.status} at iteration {t}")
        if not outcome.ok:
            raise NumericalFailure(f"power initialization ended {outcome.status}")
        u0, u0_aerial = update_aux(ch, nb.combine(outcome.powers), noise, with_aerial)
        if outcome.delta >= 0:
            return outcome.powers
        if previous is not None and abs(outcome.delta - previous) < 1e-9:
            break
        previous = outcome.delta
    raise InfeasibleError(f"power allocation infeasible (best margin {outcome.delta:.3e})")


def scale_to_limits(
    scenario: ScenarioConfig, ch: ChannelRealization, nb: NormalizedBeamformers, powers: PowerAllocation
) -> PowerAllocation:
    """Largest common scaling ``c >= 1`` of ``powers`` that keeps every budget and the satellite cap.

    Every SINR is nondecreasing in a common power scale, so the aerial floor keeps holding.
    """
    limits = []
    for n, budget in enumerate(scenario.bs_power_budgets):
        used = float(powers.p[ch.cell_of == n].sum())
        if used > 0:
            limits.append(budget / used)
    if powers.q > 0:
        limits.append(scenario.aerial_power_budget / powers.q)
    sat = satellite_interference(ch, nb.combine(powers))
    if sat > 0:
        limits.append(scenario.interference_temperature / sat)
    c = min(limits, default=1.0) * (1.0 - 1e-9)
    if c <= 1.0:
        return powers
    return PowerAllocation(q=powers.q * c, p=powers.p * c)


def power_alloc_sca(
    scenario: ScenarioConfig,
    ch: ChannelRealization,
    nb: NormalizedBeamformers,
    eps4: Optional[float] = None,
    settings: Optional[IsSettings] = None,
    trace: Optional[ConvergenceTrace] = None,
    rng: Optional[np.random.Generator] = None,
) -> PowerAllocation:
    """Successive convex approximation over ``(q, p)`` for fixed directions, used by IS and MRC.

    Starts from the margin-maximizing powers scaled up to the tightest limit. Stopping on
    ``sca_cap`` rather than on ``eps4`` is logged and marks ``trace`` as not converged.
    """
    settings = settings or IsSettings()
    eps4 = settings.eps4 if eps4 is None else eps4
    rng = rng if rng is not None else np.random.default_rng(0)
    noise = effective_noise(ch, scenario.noise_power)
    with_aerial = not scenario.is_hierarchical

    start = scale_to_limits(scenario, ch, nb, _initial_powers(scenario, ch, nb, noise, settings, rng))
    u0, u0_aerial = update_aux(ch, nb.combine(start), noise, with_aerial)
    phi_prev: Optional[float] = None
    powers: Optional[PowerAllocation] = None
    converged = False
    for t in range(1, settings.sca_cap + 1):
        outcome = solve(build_power_subproblem(scenario, ch, nb, u0, u0_aerial, noise))
        if not outcome.ok:
            if powers is None:
                raise NumericalFailure(f"power subproblem ended {outcome.status}")
            logger.warning("Power subproblem ended %s at t=%d; keeping last iterate", outcome.status, t)
            break
        powers = outcome.powers
        # linearize at the new powers
        u0, u0_aerial = update_aux(ch, nb.combine(powers), noise, with_aerial)
        phi = outcome.objective
        if trace is not None:
            trace.record(0, t, phi)
        logger.debug("power SCA t=%d phi=%.6f", t, phi)
        if phi_prev is not None and abs(phi - phi_prev) <= eps4:
            converged = True
            break
        phi_prev = phi
    if not converged:
        logger.warning("Power SCA stopped after %d iteration(s) without reaching eps4=%.1e", t, eps4)
        if trace is not None:
            trace.converged = False
    return powers


def zf_power(
    scenario: ScenarioConfig,
    ch: ChannelRealization,
    nb: NormalizedBeamformers,
    noise: Optional[EffectiveNoise] = None,
) -> PowerAllocation:
    """One-shot concave power program for interference-free directions."""
    noise = noise or effective_noise(ch, scenario.noise_power)
    coef = zf_coefficients(scenario, ch, nb, noise)
    q_min = 0.0
    if scenario.is_hierarchical:
        if coef["aerial_signal"] <= 0:
            raise InfeasibleError("aerial direction delivers no signal")
        q_min = scenario.beta_floor * coef["noise_a"] / coef["aerial_signal"]
        if q_min > scenario.aerial_power_budget:
            raise InfeasibleError(f"aerial floor needs {q_min:.3e} W > budget {scenario.aerial_power_budget} W")
        if q_min * coef["aerial_at_sat"] > coef["cap"]:
            raise InfeasibleError("aerial floor alone exceeds the satellite interference cap")
    outcome = solve(build_zf_power_subproblem(scenario, ch, nb, noise))
    if outcome.status == "infeasible":
        raise InfeasibleError("zero-forcing power program infeasible")
    if not outcome.ok:
        raise NumericalFailure(f"zero-forcing power program ended {outcome.status}")
    powers = outcome.powers
    if scenario.is_hierarchical:
        # q is free in the objective; keep the smallest value meeting the floor
        powers = PowerAllocation(q=max(q_min, 0.0), p=powers.p)
    return powers


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------

def run_scheme(
    scheme: LowComplexityScheme,
    scenario: ScenarioConfig,
    ch: ChannelRealization,
    settings: Optional[IsSettings] = None,
    rng: Optional[np.random.Generator] = None,
) -> SchemeResult:
    """Step 1 directions, step 2 powers, recombine and score."""
    settings = settings or IsSettings()
    noise = effective_noise(ch, scenario.noise_power)
    result = SchemeResult(scheme=scheme, mode=scenario.mode, status="ok")
    try:
        if scheme == "IS":
            nb = is_step1(scenario, ch, settings)
        elif scheme == "ZF":
            nb = zf_step1(scenario, ch)
        elif scheme == "MRC":
            nb = mrc_step1(scenario, ch)
        else:
            raise InvalidArgumentError(f"unknown scheme {scheme!r}")
        if scheme == "ZF":
            powers = zf_power(scenario, ch, nb, noise)
            result.inner_iterations = 1
        else:
            powers = power_alloc_sca(scenario, ch, nb, settings=settings, trace=result.trace, rng=rng)
            result.inner_iterations = result.trace.inner_iterations
    except NotApplicableError as e:
        logger.info("%s not applicable: %s", scheme, e)
        result.status, result.message = "not_applicable", str(e)
        return result
    except InfeasibleError as e:
        logger.info("%s infeasible: %s", scheme, e)
        result.status, result.message = "infeasible", str(e)
        return result
    except NumericalFailure as e:
        logger.warning("%s failed: %s", scheme, e)
        result.status, result.message = "numerical_failure", str(e)
        return result
    result.outer_iterations = 1
    if not result.trace.converged:
        result.status = "not_converged"
        result.message = f"power allocation hit the {settings.sca_cap}-iteration cap"
    return score_beamformers(result, scenario, ch, nb.combine(powers), noise)
