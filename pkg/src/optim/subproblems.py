"""Builders for the convex subproblems solved inside the iterative schemes.

All subproblems are expressed in units of the receiver noise power: channel Gram matrices,
effective noises and the interference cap are divided by sigma^2 and the auxiliary ``u``
variables are shifted by ``ln sigma^2``. Transmit variables are stored as fractions of their
power budget (``scales`` maps them back to watts) and every relaxable row is divided by its
right-hand-side scale, so all rows and margins are O(1) whatever the budgets.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Optional

import cvxpy as cp
import numpy as np
import scipy.io
import scipy.sparse
import yaml

from src.channel.realization import ChannelRealization
from src.errors import InvalidArgumentError
from src.network.evaluation import effective_noise, interference_levels, link_powers
from src.network.models import BeamformerSet, EffectiveNoise, LiftedIterate, NormalizedBeamformers
from src.network.scenario import ScenarioConfig
from src.optim.surrogates import EigTangent, ExpTangent

logger = logging.getLogger(__name__)

SubproblemKind = Literal["pibf-inner", "pibf-init", "power-is", "power-init", "power-zf"]

# (name, lhs, rhs) meaning lhs <= rhs
Relaxable = tuple[str, cp.Expression, cp.Expression]


@dataclass
class ConvexSubproblem:
    """A ready-to-solve cvxpy problem plus what is needed to read its solution back."""

    kind: SubproblemKind
    problem: cp.Problem
    variables: dict[str, cp.Variable]
    noise_power: float
    hierarchical: bool
    tangent: Optional[EigTangent] = None
    labels: list[str] = field(default_factory=list)
    # variable name -> factor turning its value into watts
    scales: dict[str, float | np.ndarray] = field(default_factory=dict)

    def to_watts(self, name: str, value: np.ndarray) -> np.ndarray:
        return np.asarray(value) * self.scales.get(name, 1.0)

    @property
    def lifted(self) -> bool:
        return self.kind in ("pibf-inner", "pibf-init")

    @property
    def log_noise(self) -> float:
        return math.log(self.noise_power)

    def dump(self, directory: Path, solver: str = cp.CLARABEL) -> Path:
        """Write the canonical conic data ``(c, A, b, cone dims)`` as Matrix Market text files."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        data, _, _ = self.problem.get_problem_data(solver)
        stem = directory / self.kind
        scipy.io.mmwrite(f"{stem}_A.mtx", scipy.sparse.csc_matrix(data["A"]))
        scipy.io.mmwrite(f"{stem}_c.mtx", np.asarray(data["c"], dtype=float).reshape(-1, 1))
        scipy.io.mmwrite(f"{stem}_b.mtx", np.asarray(data["b"], dtype=float).reshape(-1, 1))
        dims = data.get("dims")
        cones = {
            "zero": int(getattr(dims, "zero", 0)),
            "nonneg": int(getattr(dims, "nonneg", 0)),
            "exp": int(getattr(dims, "exp", 0)),
            "soc": [int(s) for s in getattr(dims, "soc", [])],
            "psd": [int(s) for s in getattr(dims, "psd", [])],
        }
        with open(f"{stem}_cones.yaml", "w", encoding="utf-8") as f:
            yaml.safe_dump({"kind": self.kind, "solver": solver, "cones": cones}, f, sort_keys=False)
        logger.info("Dumped %s subproblem to %s", self.kind, directory)
        return directory


# ---------------------------------------------------------------------------
# Lifted (matrix) model shared by the PIBF subproblems
# ---------------------------------------------------------------------------

def _gram(h: np.ndarray, scale: float) -> np.ndarray:
    hn = h * math.sqrt(scale)
    return np.outer(hn, hn.conj())


def _rx(H: np.ndarray, X: cp.Expression) -> cp.Expression:
    return cp.real(cp.trace(H @ X))


def _row(name: str, lhs: cp.Expression, rhs: cp.Expression | float, scale: float) -> Relaxable:
    return name, lhs / scale, rhs / scale


class _LiftedModel:
    """Variables and affine received-power expressions of the lifted problem.

    ``V_hat`` and ``W_hat`` are the matrices divided by their budget; ``V`` and ``W`` are in watts.
    """

    def __init__(self, scenario: ScenarioConfig, ch: ChannelRealization, noise: EffectiveNoise) -> None:
        self.scenario = scenario
        self.ch = ch
        scale = 1.0 / scenario.noise_power
        n_terms = ch.n_terminals
        self.budgets = [scenario.bs_power_budgets[int(n)] for n in ch.cell_of]
        self.V_hat = cp.Variable((scenario.antennas_aerial,) * 2, hermitian=True)
        self.W_hat = [cp.Variable((scenario.antennas_ground,) * 2, hermitian=True) for _ in range(n_terms)]
        self.V = scenario.aerial_power_budget * self.V_hat
        self.W = [b * W for b, W in zip(self.budgets, self.W_hat)]

        self.received = [
            [_rx(_gram(ch.cross(i, j), scale), self.W[i]) for j in range(n_terms)] for i in range(n_terms)
        ]
        self.noise_t = noise.terminals * scale
        self.noise_a = noise.aerial * scale
        self.alpha = [
            self.noise_t[j]
            + _rx(_gram(ch.g_ter[j], scale), self.V)
            + sum(self.received[i][j] for i in range(n_terms) if i != j)
            for j in range(n_terms)
        ]
        self.total = [self.alpha[j] + self.received[j][j] for j in range(n_terms)]
        self.alpha_aerial = self.noise_a + sum(
            _rx(_gram(ch.h_aer[ch.cell_of[i]], scale), self.W[i]) for i in range(n_terms)
        )
        self.aerial_signal = _rx(_gram(ch.g_aer, scale), self.V)
        self.sat = _rx(_gram(ch.g_sat, scale), self.V) + sum(
            _rx(_gram(ch.h_sat[ch.cell_of[i]], scale), self.W[i]) for i in range(n_terms)
        )
        self.cap = scenario.interference_temperature * scale

    @property
    def matrices(self) -> list[cp.Expression]:
        return [*self.W, self.V]

    @property
    def variables(self) -> dict[str, cp.Variable]:
        return {"V": self.V_hat, **{f"W{j}": W for j, W in enumerate(self.W_hat)}}

    @property
    def scales(self) -> dict[str, float]:
        return {"V": self.scenario.aerial_power_budget, **{f"W{j}": b for j, b in enumerate(self.budgets)}}

    def psd(self) -> list[cp.Constraint]:
        return [X >> 0 for X in [*self.W_hat, self.V_hat]]

    def relaxable(self) -> list[Relaxable]:
        sc = self.scenario
        rows: list[Relaxable] = [_row("satellite_interference", self.sat, self.cap, self.cap)]
        for n, budget in enumerate(sc.bs_power_budgets):
            members = np.flatnonzero(self.ch.cell_of == n)
            used = sum(cp.real(cp.trace(self.W[j])) for j in members)
            rows.append(_row(f"bs_power[{n}]", used, budget, budget))
        rows.append(_row("aerial_power", cp.real(cp.trace(self.V)), sc.aerial_power_budget, sc.aerial_power_budget))
        if sc.is_hierarchical and sc.beta_floor > 0:
            rows.append(
                _row("aerial_rate", sc.beta_floor * self.alpha_aerial, self.aerial_signal, 1.0 + sc.beta_floor)
            )
        return rows


# ---------------------------------------------------------------------------
# Scalar power model shared by the two-step schemes
# ---------------------------------------------------------------------------

class _PowerModel:
    """Received-power coefficients of fixed unit directions, linear in ``(q, p)``."""

    def __init__(
        self,
        scenario: ScenarioConfig,
        ch: ChannelRealization,
        nb: NormalizedBeamformers,
        noise: EffectiveNoise,
    ) -> None:
        self.scenario = scenario
        self.ch = ch
        scale = 1.0 / scenario.noise_power
        gains = link_powers(ch, BeamformerSet(v=nb.v, w=nb.w))
        self.gain = gains.terr * scale
        self.direct = np.diag(self.gain).copy()
        self.cross = self.gain - np.diag(self.direct)
        self.aerial_at_terr = gains.aerial_at_terr * scale
        self.aerial_signal = gains.aerial_signal * scale
        self.terr_at_aerial = gains.terr_at_aerial * scale
        self.terr_at_sat = gains.terr_at_sat * scale
        self.aerial_at_sat = gains.aerial_at_sat * scale
        self.noise_t = noise.terminals * scale
        self.noise_a = noise.aerial * scale
        self.cap = scenario.interference_temperature * scale

        self.budgets = np.array([scenario.bs_power_budgets[int(n)] for n in ch.cell_of], dtype=float)
        self.q_hat = cp.Variable(nonneg=True)
        self.p_hat = cp.Variable(ch.n_terminals, nonneg=True)
        self.q = scenario.aerial_power_budget * self.q_hat
        self.p = cp.multiply(self.budgets, self.p_hat)
        self.alpha = self.noise_t + self.aerial_at_terr * self.q + self.cross.T @ self.p
        self.total = self.alpha + cp.multiply(self.direct, self.p)
        self.alpha_aerial = self.noise_a + self.terr_at_aerial @ self.p

    @property
    def variables(self) -> dict[str, cp.Variable]:
        return {"q": self.q_hat, "p": self.p_hat}

    @property
    def scales(self) -> dict[str, float | np.ndarray]:
        return {"q": self.scenario.aerial_power_budget, "p": self.budgets}

    def relaxable(self) -> list[Relaxable]:
        sc = self.scenario
        interference = self.terr_at_sat @ self.p + self.aerial_at_sat * self.q
        rows: list[Relaxable] = [_row("satellite_interference", interference, self.cap, self.cap)]
        for n, budget in enumerate(sc.bs_power_budgets):
            members = np.flatnonzero(self.ch.cell_of == n)
            rows.append(_row(f"bs_power[{n}]", cp.sum(self.p[members]), budget, budget))
        rows.append(_row("aerial_power", self.q, sc.aerial_power_budget, sc.aerial_power_budget))
        if sc.is_hierarchical and sc.beta_floor > 0:
            rows.append(
                _row("aerial_rate", sc.beta_floor * self.alpha_aerial, self.aerial_signal * self.q, 1.0 + sc.beta_floor)
            )
        return rows


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _noise(scenario: ScenarioConfig, ch: ChannelRealization, noise: Optional[EffectiveNoise]) -> EffectiveNoise:
    return noise if noise is not None else effective_noise(ch, scenario.noise_power)


def _taylor(alpha: cp.Expression, u: cp.Expression, tangent: ExpTangent) -> cp.Expression:
    """``alpha <= e^{u0} (u - u0 + 1)`` divided by ``e^{u0}``; caller adds ``<= 0``."""
    return cp.multiply(1.0 / tangent.slope, alpha) - (u - tangent.point + 1.0)


def _normalized_points(
    scenario: ScenarioConfig, u0: np.ndarray, u0_aerial: Optional[float], n_terms: int
) -> tuple[ExpTangent, Optional[ExpTangent]]:
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (n_terms,) or not np.all(np.isfinite(u0)):
        raise InvalidArgumentError(f"expected {n_terms} finite auxiliary values, got {u0}")
    shift = math.log(scenario.noise_power)
    aerial = None
    if not scenario.is_hierarchical:
        if u0_aerial is None or not math.isfinite(u0_aerial):
            raise InvalidArgumentError("TCSSA subproblems need a finite aerial auxiliary value")
        aerial = ExpTangent(np.array(u0_aerial - shift))
    return ExpTangent(u0 - shift), aerial


def _tight_constraints(rows: list[Relaxable], delta: Optional[cp.Variable] = None) -> list[cp.Constraint]:
    if delta is None:
        return [lhs <= rhs for _, lhs, rhs in rows]
    return [lhs + delta <= rhs for _, lhs, rhs in rows]


# ---------------------------------------------------------------------------
# PIBF subproblems
# ---------------------------------------------------------------------------

def build_inner_subproblem(
    scenario: ScenarioConfig,
    ch: ChannelRealization,
    anchor: LiftedIterate,
    xi: float,
    noise: Optional[EffectiveNoise] = None,
) -> ConvexSubproblem:
    """Penalized SCA step around ``anchor``: max sum(s - u) - xi * F_bar over the lifted feasible set."""
    noise = _noise(scenario, ch, noise)
    if xi < 0:
        raise InvalidArgumentError(f"penalty factor must be >= 0, got {xi}")
    alpha, alpha_aerial = interference_levels(ch, anchor, noise)
    if np.any(alpha <= 0) or alpha_aerial <= 0:
        raise InvalidArgumentError("anchor has non-positive interference-plus-noise")
    exp_t, exp_a = _normalized_points(scenario, anchor.u, anchor.u_aerial, ch.n_terminals)

    model = _LiftedModel(scenario, ch, noise)
    eig = EigTangent.at(anchor)
    u = cp.Variable(ch.n_terminals)
    penalty = sum(
        cp.real(cp.trace(X)) - cp.real(cp.trace(np.outer(theta, theta.conj()) @ X))
        for X, theta in zip(model.matrices, eig.thetas)
    )
    rate = cp.sum(cp.hstack([cp.log(t) for t in model.total])) - cp.sum(u)
    rows = model.relaxable()
    constraints = model.psd() + _tight_constraints(rows)
    constraints.append(_taylor(cp.hstack(model.alpha), u, exp_t) <= 0)
    variables: dict[str, cp.Variable] = {**model.variables, "u": u}
    if exp_a is not None:
        u_a = cp.Variable()
        rate = rate + cp.log(model.alpha_aerial + model.aerial_signal) - u_a
        constraints.append(_taylor(model.alpha_aerial, u_a, exp_a) <= 0)
        variables["u_aerial"] = u_a

    problem = cp.Problem(cp.Maximize(rate - xi * penalty), constraints)
    return ConvexSubproblem(
        kind="pibf-inner", problem=problem, variables=variables, noise_power=scenario.noise_power,
        hierarchical=scenario.is_hierarchical, tangent=eig, labels=[r[0] for r in rows], scales=model.scales,
    )


def build_init_subproblem(
    scenario: ScenarioConfig,
    ch: ChannelRealization,
    u0: np.ndarray,
    u0_aerial: Optional[float] = None,
    noise: Optional[EffectiveNoise] = None,
) -> ConvexSubproblem:
    """Constraint-satisfaction step: maximize the common margin ``delta`` of every linear constraint.

    PSD constraints stay hard; only the budget, cap, floor and expansion constraints are relaxed.
    """
    noise = _noise(scenario, ch, noise)
    exp_t, exp_a = _normalized_points(scenario, u0, u0_aerial, ch.n_terminals)
    model = _LiftedModel(scenario, ch, noise)
    u = cp.Variable(ch.n_terminals)
    delta = cp.Variable()
    rows = model.relaxable()
    constraints = model.psd() + _tight_constraints(rows, delta)
    constraints.append(_taylor(cp.hstack(model.alpha), u, exp_t) + delta <= 0)
    variables: dict[str, cp.Variable] = {**model.variables, "u": u, "delta": delta}
    if exp_a is not None:
        u_a = cp.Variable()
        constraints.append(_taylor(model.alpha_aerial, u_a, exp_a) + delta <= 0)
        variables["u_aerial"] = u_a
    problem = cp.Problem(cp.Maximize(delta), constraints)
    return ConvexSubproblem(
        kind="pibf-init", problem=problem, variables=variables, noise_power=scenario.noise_power,
        hierarchical=scenario.is_hierarchical, labels=[r[0] for r in rows], scales=model.scales,
    )


# ---------------------------------------------------------------------------
# Power-allocation subproblems
# ---------------------------------------------------------------------------

def build_power_subproblem(
    scenario: ScenarioConfig,
    ch: ChannelRealization,
    nb: NormalizedBeamformers,
    u0: np.ndarray,
    u0_aerial: Optional[float] = None,
    noise: Optional[EffectiveNoise] = None,
) -> ConvexSubproblem:
    """SCA step of the power allocation for fixed directions (interference kept)."""
    noise = _noise(scenario, ch, noise)
    exp_t, exp_a = _normalized_points(scenario, u0, u0_aerial, ch.n_terminals)
    model = _PowerModel(scenario, ch, nb, noise)
    u = cp.Variable(ch.n_terminals)
    rows = model.relaxable()
    objective = cp.sum(cp.log(model.total)) - cp.sum(u)
    constraints = _tight_constraints(rows) + [_taylor(model.alpha, u, exp_t) <= 0]
    variables: dict[str, cp.Variable] = {**model.variables, "u": u}
    if exp_a is not None:
        u_a = cp.Variable()
        objective = objective + cp.log(model.alpha_aerial + model.aerial_signal * model.q) - u_a
        constraints.append(_taylor(model.alpha_aerial, u_a, exp_a) <= 0)
        variables["u_aerial"] = u_a
    return ConvexSubproblem(
        kind="power-is", problem=cp.Problem(cp.Maximize(objective), constraints), variables=variables,
        noise_power=scenario.noise_power, hierarchical=scenario.is_hierarchical, labels=[r[0] for r in rows],
        scales=model.scales,
    )


def build_power_init_subproblem(
    scenario: ScenarioConfig,
    ch: ChannelRealization,
    nb: NormalizedBeamformers,
    u0: np.ndarray,
    u0_aerial: Optional[float] = None,
    noise: Optional[EffectiveNoise] = None,
) -> ConvexSubproblem:
    """Scalar counterpart of :func:`build_init_subproblem` for fixed directions."""
    noise = _noise(scenario, ch, noise)
    exp_t, exp_a = _normalized_points(scenario, u0, u0_aerial, ch.n_terminals)
    model = _PowerModel(scenario, ch, nb, noise)
    u = cp.Variable(ch.n_terminals)
    delta = cp.Variable()
    rows = model.relaxable()
    constraints = _tight_constraints(rows, delta) + [_taylor(model.alpha, u, exp_t) + delta <= 0]
    variables: dict[str, cp.Variable] = {**model.variables, "u": u, "delta": delta}
    if exp_a is not None:
        u_a = cp.Variable()
        constraints.append(_taylor(model.alpha_aerial, u_a, exp_a) + delta <= 0)
        variables["u_aerial"] = u_a
    return ConvexSubproblem(
        kind="power-init", problem=cp.Problem(cp.Maximize(delta), constraints), variables=variables,
        noise_power=scenario.noise_power, hierarchical=scenario.is_hierarchical, labels=[r[0] for r in rows],
        scales=model.scales,
    )


def build_zf_power_subproblem(
    scenario: ScenarioConfig,
    ch: ChannelRealization,
    nb: NormalizedBeamformers,
    noise: Optional[EffectiveNoise] = None,
) -> ConvexSubproblem:
    """One-shot power allocation for interference-free directions: sum of log(1 + c p / noise)."""
    noise = _noise(scenario, ch, noise)
    model = _PowerModel(scenario, ch, nb, noise)
    objective = cp.sum(cp.log(1.0 + cp.multiply(model.direct / model.noise_t, model.p)))
    if not scenario.is_hierarchical:
        objective = objective + cp.log(1.0 + (model.aerial_signal / model.noise_a) * model.q)
    rows = model.relaxable()
    return ConvexSubproblem(
        kind="power-zf", problem=cp.Problem(cp.Maximize(objective), _tight_constraints(rows)),
        variables=model.variables, noise_power=scenario.noise_power,
        hierarchical=scenario.is_hierarchical, labels=[r[0] for r in rows], scales=model.scales,
    )


def zf_coefficients(
    scenario: ScenarioConfig,
    ch: ChannelRealization,
    nb: NormalizedBeamformers,
    noise: Optional[EffectiveNoise] = None,
) -> dict[str, np.ndarray | float]:
    """Normalized link coefficients of fixed directions, as seen by the power programs."""
    model = _PowerModel(scenario, ch, nb, _noise(scenario, ch, noise))
    return {
        "direct": model.direct,
        "cross": model.cross,
        "noise_t": model.noise_t,
        "noise_a": model.noise_a,
        "aerial_signal": model.aerial_signal,
        "terr_at_aerial": model.terr_at_aerial,
        "terr_at_sat": model.terr_at_sat,
        "aerial_at_sat": model.aerial_at_sat,
        "aerial_at_terr": model.aerial_at_terr,
        "cap": model.cap,
    }
