"""Invariant suite run by the ``check`` command on seeded random instances."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from src.channel.geometry import steering_vector
from src.channel.realization import ChannelRealization, draw_realization
from src.config import RunConfig
from src.errors import NotApplicableError
from src.network.evaluation import (
    aerial_sinr,
    check_constraints,
    effective_noise,
    merit_mu,
    penalty_F,
    satellite_interference,
    terrestrial_sinrs,
)
from src.network.models import BeamformerSet, LiftedIterate, top_eig
from src.optim.surrogates import EigTangent, ExpTangent
from src.schemes.low_complexity import is_step1, zf_step1

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def _random_beamformers(rng: np.random.Generator, ch: ChannelRealization, m_a: int, m_g: int) -> BeamformerSet:
    def draw(*shape: int) -> np.ndarray:
        return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

    return BeamformerSet(v=draw(m_a), w=draw(ch.n_terminals, m_g))


def _random_psd(rng: np.random.Generator, dim: int, rank: int) -> np.ndarray:
    A = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    return A @ A.conj().T


def _close(a: float, b: float, rel: float) -> bool:
    return math.isclose(a, b, rel_tol=rel, abs_tol=1e-300)


def check_rate_floor_round_trip(config: RunConfig, rng: np.random.Generator, ch: ChannelRealization) -> CheckResult:
    sc = config.scenario
    ok = abs(math.log2(1.0 + sc.beta_floor) - sc.aerial_rate_floor) <= 1e-12
    return CheckResult("rate_floor_round_trip", ok)


def check_steering_unit_modulus(config: RunConfig, rng: np.random.Generator, ch: ChannelRealization) -> CheckResult:
    angle = rng.uniform(-math.pi, math.pi)
    dim = int(rng.integers(1, 16))
    ok = bool(np.allclose(np.abs(steering_vector(angle, dim)), 1.0, atol=1e-12))
    return CheckResult("steering_unit_modulus", ok, f"angle={angle:.4f} dim={dim}")


def check_satellite_beamformer_power(config: RunConfig, rng: np.random.Generator, ch: ChannelRealization) -> CheckResult:
    power = float(np.linalg.norm(ch.u) ** 2)
    return CheckResult("satellite_power", _close(power, config.scenario.satellite_power, 1e-9), f"{power:.12g} W")


def check_effective_noise(config: RunConfig, rng: np.random.Generator, ch: ChannelRealization) -> CheckResult:
    sigma2 = config.scenario.noise_power
    noise = effective_noise(ch, sigma2)
    ok = bool(np.all(noise.terminals >= sigma2) and noise.aerial >= sigma2)
    return CheckResult("effective_noise_floor", ok)


def check_lifted_equivalence(config: RunConfig, rng: np.random.Generator, ch: ChannelRealization) -> CheckResult:
    sc = config.scenario
    bf = _random_beamformers(rng, ch, sc.antennas_aerial, sc.antennas_ground)
    it = bf.lift()
    noise = effective_noise(ch, sc.noise_power)
    pairs = [
        *zip(terrestrial_sinrs(ch, bf, noise), terrestrial_sinrs(ch, it, noise)),
        (aerial_sinr(ch, bf, noise), aerial_sinr(ch, it, noise)),
        (satellite_interference(ch, bf), satellite_interference(ch, it)),
        (merit_mu(sc, ch, bf, 0.0, noise), merit_mu(sc, ch, it, 0.0, noise)),
    ]
    worst = max(abs(a - b) / max(abs(a), 1e-300) for a, b in pairs)
    return CheckResult("vector_lifted_equivalence", worst <= 1e-9, f"worst relative gap {worst:.2e}")


def check_penalty(config: RunConfig, rng: np.random.Generator, ch: ChannelRealization) -> CheckResult:
    dim = config.scenario.antennas_ground
    rank_one = _random_psd(rng, dim, 1)
    full = _random_psd(rng, dim, dim)
    eta_full = top_eig(full)[0]
    it = LiftedIterate(V=rank_one, W=np.stack([rank_one]), u=np.zeros(1))
    ok = abs(penalty_F(it)) <= 1e-8 * np.trace(rank_one).real and eta_full < np.trace(full).real
    return CheckResult("rank_one_penalty", bool(ok))


def check_tangents(config: RunConfig, rng: np.random.Generator, ch: ChannelRealization) -> CheckResult:
    point = rng.uniform(-5.0, 5.0)
    grid = np.linspace(point - 5.0, point + 5.0, 201)
    exp_ok = bool(np.all(ExpTangent(np.array(point)).value(grid) <= np.exp(grid) * (1 + 1e-12)))

    dim = config.scenario.antennas_aerial
    anchor = LiftedIterate(V=_random_psd(rng, dim, 2), W=np.stack([_random_psd(rng, dim, 3)]), u=np.zeros(1))
    sample = LiftedIterate(V=_random_psd(rng, dim, 4), W=np.stack([_random_psd(rng, dim, 1)]), u=np.zeros(1))
    eig = EigTangent.at(anchor)
    eig_ok = eig.penalty(sample) >= penalty_F(sample) - 1e-9 and abs(eig.penalty(anchor) - penalty_F(anchor)) <= 1e-9 * (
        1 + penalty_F(anchor)
    )
    return CheckResult("tangent_minorants", exp_ok and bool(eig_ok))


def check_monotone_scaling(config: RunConfig, rng: np.random.Generator, ch: ChannelRealization) -> CheckResult:
    sc = config.scenario
    bf = _random_beamformers(rng, ch, sc.antennas_aerial, sc.antennas_ground).scaled(1e-3)
    before = check_constraints(sc, ch, bf)
    after = check_constraints(sc, ch, bf.scaled(rng.uniform(0.1, 0.9)))
    kept = [name for name, slack in before.slacks.items() if name != "aerial_rate" and slack >= 0]
    ok = all(after.slacks[name] >= 0 for name in kept)
    return CheckResult("constraint_monotonicity", ok)


def check_zf_nulling(config: RunConfig, rng: np.random.Generator, ch: ChannelRealization) -> CheckResult:
    try:
        nb = zf_step1(config.scenario, ch)
    except NotApplicableError as e:
        return CheckResult("zf_nulling", True, f"skipped: {e}")
    worst = 0.0
    for j in range(ch.n_terminals):
        for i in range(ch.n_terminals):
            if i != j:
                worst = max(worst, abs(np.vdot(ch.cross(j, i), nb.w[j])))
        worst = max(worst, abs(np.vdot(ch.h_aer[ch.cell_of[j]], nb.w[j])))
    worst = max(worst, float(np.max(np.abs(ch.g_ter.conj() @ nb.v))))
    return CheckResult("zf_nulling", worst < 1e-10, f"max leak {worst:.2e}")


def check_is_threshold(config: RunConfig, rng: np.random.Generator, ch: ChannelRealization) -> CheckResult:
    settings = config.interference_suppression
    nb = is_step1(config.scenario, ch, settings)
    D = sum(np.outer(g, g.conj()) for g in ch.g_ter)
    leak = float(np.real(np.vdot(nb.v, D @ nb.v)))
    return CheckResult("is_threshold", leak <= settings.chi * (1 + 1e-6), f"aerial leak {leak:.3e}")


CHECKS: list[Callable[[RunConfig, np.random.Generator, ChannelRealization], CheckResult]] = [
    check_rate_floor_round_trip,
    check_steering_unit_modulus,
    check_satellite_beamformer_power,
    check_effective_noise,
    check_lifted_equivalence,
    check_penalty,
    check_tangents,
    check_monotone_scaling,
    check_zf_nulling,
    check_is_threshold,
]


def run_checks(config: RunConfig, instances: int = 10, seed: int = 0) -> list[CheckResult]:
    """Every check on ``instances`` seeded realizations; a failing check is reported once per instance."""
    results: list[CheckResult] = []
    for k in range(instances):
        ch = draw_realization([seed, k], config.scenario)
        rng = np.random.default_rng([seed, k])
        for check in CHECKS:
            try:
                result = check(config, rng, ch)
            except Exception as e:
                logger.exception("Check %s crashed on instance %d", check.__name__, k)
                result = CheckResult(check.__name__.removeprefix("check_"), False, f"crashed: {e}")
            if not result.passed:
                logger.warning("Instance %d: %s failed %s", k, result.name, result.detail)
            results.append(result)
    return results
