"""SINR, rate, interference and feasibility evaluators for vector and lifted beamformers.

Every evaluator accepts either a :class:`BeamformerSet` or a :class:`LiftedIterate`; the two
agree exactly on rank-one iterates.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from src.channel.realization import ChannelRealization
from src.errors import InvalidArgumentError
from src.network.models import BeamformerSet, EffectiveNoise, LiftedIterate, top_eig
from src.network.scenario import ScenarioConfig

logger = logging.getLogger(__name__)

FEASIBILITY_TOL = 1e-6
LOG2E = 1.0 / math.log(2.0)

Beamformers = Union[BeamformerSet, LiftedIterate]


# ---------------------------------------------------------------------------
# Received powers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinkPowers:
    """Received powers (W) produced by one set of beamformers.

    ``terr[i, j]``: beam of terminal i received at terminal j.
    """

    terr: np.ndarray
    aerial_at_terr: np.ndarray
    aerial_signal: float
    terr_at_aerial: np.ndarray
    terr_at_sat: np.ndarray
    aerial_at_sat: float


def _quad(h: np.ndarray, X: np.ndarray) -> float:
    """``|h^H x|^2`` for a vector x, ``h^H X h`` for a matrix X."""
    if X.ndim == 1:
        return float(abs(np.vdot(h, X)) ** 2)
    return float(np.real(np.vdot(h, X @ h)))


def link_powers(ch: ChannelRealization, bf: Beamformers) -> LinkPowers:
    if isinstance(bf, LiftedIterate):
        aerial, beams = bf.V, bf.W
    else:
        aerial, beams = bf.v, bf.w
    n_terms = ch.n_terminals
    terr = np.array([[_quad(ch.cross(i, j), beams[i]) for j in range(n_terms)] for i in range(n_terms)])
    return LinkPowers(
        terr=terr,
        aerial_at_terr=np.array([_quad(ch.g_ter[j], aerial) for j in range(n_terms)]),
        aerial_signal=_quad(ch.g_aer, aerial),
        terr_at_aerial=np.array([_quad(ch.h_aer[ch.cell_of[i]], beams[i]) for i in range(n_terms)]),
        terr_at_sat=np.array([_quad(ch.h_sat[ch.cell_of[i]], beams[i]) for i in range(n_terms)]),
        aerial_at_sat=_quad(ch.g_sat, aerial),
    )


def transmit_powers(bf: Beamformers) -> tuple[np.ndarray, float]:
    """Per-terminal transmit powers and the aerial transmit power (W)."""
    if isinstance(bf, LiftedIterate):
        return np.real(np.trace(bf.W, axis1=1, axis2=2)), float(np.real(np.trace(bf.V)))
    return np.sum(np.abs(bf.w) ** 2, axis=1), float(np.sum(np.abs(bf.v) ** 2))


# ---------------------------------------------------------------------------
# Noise, SINR and rates
# ---------------------------------------------------------------------------

def effective_noise(ch: ChannelRealization, noise_power: float) -> EffectiveNoise:
    """Noise plus satellite interference ``sigma^2 + |f^H u|^2`` at every receiver."""
    terminals = noise_power + np.abs(ch.f_ter.conj() @ ch.u) ** 2
    aerial = noise_power + abs(np.vdot(ch.f_aer, ch.u)) ** 2
    return EffectiveNoise(terminals=terminals, aerial=float(aerial))


def terminal_index(ch: ChannelRealization, n: int, k: int) -> int:
    """Flat index of terminal k of cell n."""
    members = np.flatnonzero(ch.cell_of == n)
    if not 0 <= k < len(members):
        raise InvalidArgumentError(f"cell {n} has no terminal {k}")
    return int(members[k])


def interference_levels(
    ch: ChannelRealization, bf: Beamformers, noise: EffectiveNoise
) -> tuple[np.ndarray, float]:
    """Interference-plus-noise ``alpha`` at every terminal and at the aerial user."""
    p = link_powers(ch, bf)
    alpha = noise.terminals + p.aerial_at_terr + p.terr.sum(axis=0) - np.diag(p.terr)
    alpha_aerial = noise.aerial + p.terr_at_aerial.sum()
    return alpha, float(alpha_aerial)


def terrestrial_sinrs(ch: ChannelRealization, bf: Beamformers, noise: EffectiveNoise) -> np.ndarray:
    p = link_powers(ch, bf)
    alpha = noise.terminals + p.aerial_at_terr + p.terr.sum(axis=0) - np.diag(p.terr)
    return np.diag(p.terr) / alpha


def terrestrial_sinr(ch: ChannelRealization, bf: Beamformers, noise: EffectiveNoise, n: int, k: int) -> float:
    """SINR of terminal k in cell n."""
    return float(terrestrial_sinrs(ch, bf, noise)[terminal_index(ch, n, k)])


def aerial_sinr(ch: ChannelRealization, bf: Beamformers, noise: EffectiveNoise) -> float:
    p = link_powers(ch, bf)
    return p.aerial_signal / (noise.aerial + p.terr_at_aerial.sum())


def terrestrial_rates(ch: ChannelRealization, bf: Beamformers, noise: EffectiveNoise) -> np.ndarray:
    """Per-terminal rates in bps/Hz."""
    return np.log2(1.0 + terrestrial_sinrs(ch, bf, noise))


def aerial_rate(ch: ChannelRealization, bf: Beamformers, noise: EffectiveNoise) -> float:
    return float(np.log2(1.0 + aerial_sinr(ch, bf, noise)))


def satellite_interference(ch: ChannelRealization, bf: Beamformers) -> float:
    """Total interference power (W) received by the satellite terminal."""
    p = link_powers(ch, bf)
    return float(p.terr_at_sat.sum() + p.aerial_at_sat)


# ---------------------------------------------------------------------------
# Feasibility
# ---------------------------------------------------------------------------

@dataclass
class FeasibilityReport:
    """Per-constraint slack (limit - value, in the constraint's own unit) and verdict."""

    slacks: dict[str, float] = field(default_factory=dict)
    violated: list[str] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return not self.violated

    def _record(self, name: str, value: float, limit: float, upper: bool = True, tol: float = FEASIBILITY_TOL) -> None:
        slack = limit - value if upper else value - limit
        self.slacks[name] = slack
        if slack < -tol * max(abs(limit), 1e-300):
            self.violated.append(name)


def check_constraints(
    scenario: ScenarioConfig,
    ch: ChannelRealization,
    bf: Beamformers,
    tol: float = FEASIBILITY_TOL,
) -> FeasibilityReport:
    """Evaluate the satellite cap, power budgets and (HCSSA only) the aerial rate floor."""
    report = FeasibilityReport()
    report._record("satellite_interference", satellite_interference(ch, bf), scenario.interference_temperature, tol=tol)
    powers, aerial_power = transmit_powers(bf)
    for n, budget in enumerate(scenario.bs_power_budgets):
        report._record(f"bs_power[{n}]", float(powers[ch.cell_of == n].sum()), budget, tol=tol)
    report._record("aerial_power", aerial_power, scenario.aerial_power_budget, tol=tol)
    if scenario.is_hierarchical and scenario.beta_floor > 0:
        noise = effective_noise(ch, scenario.noise_power)
        report._record("aerial_rate", aerial_sinr(ch, bf, noise), scenario.beta_floor, upper=False, tol=tol)
    if report.violated:
        logger.debug("Constraint check failed: %s", ", ".join(report.violated))
    return report


# ---------------------------------------------------------------------------
# Rank-one penalty and merit function
# ---------------------------------------------------------------------------

def penalty_F(it: LiftedIterate) -> float:
    """Rank-one violation ``sum(Tr X - eta(X))`` over every lifted matrix."""
    it.validate()
    return float(sum(np.real(np.trace(X)) - top_eig(X)[0] for X in it.matrices))


def merit_mu(
    scenario: ScenarioConfig,
    ch: ChannelRealization,
    it: Beamformers,
    xi: float,
    noise: EffectiveNoise | None = None,
) -> float:
    """Natural-log sum rate minus ``xi * F``; TCSSA adds the aerial term."""
    if noise is None:
        noise = effective_noise(ch, scenario.noise_power)
    p = link_powers(ch, it)
    alpha, alpha_aerial = interference_levels(ch, it, noise)
    if np.any(alpha <= 0) or alpha_aerial <= 0:
        raise InvalidArgumentError("interference-plus-noise must be positive")
    value = float(np.sum(np.log(alpha + np.diag(p.terr)) - np.log(alpha)))
    if not scenario.is_hierarchical:
        value += math.log(alpha_aerial + p.aerial_signal) - math.log(alpha_aerial)
    if isinstance(it, LiftedIterate) and xi != 0.0:
        value -= xi * penalty_F(it)
    return value
