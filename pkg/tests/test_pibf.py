"""Penalty-based iterative beamforming: settings, initialization, loop behavior and repair."""

import numpy as np
import pytest
from pydantic import ValidationError

from src.channel.realization import draw_realization
from src.errors import InfeasibleError, NumericalFailure
from src.network import BeamformerSet, EffectiveNoise, aerial_sinr, check_constraints, effective_noise, penalty_F
from src.network.evaluation import satellite_interference, transmit_powers
from src.pipeline import scheme_rng
from src.schemes import PibfSettings, initialize, run_pibf, run_pibf_tcssa
from src.schemes.pibf import CHAIN_TOL, check_ascent, fit_to_budgets, random_aux, restore_aerial_floor
from tests.conftest import hand_realization, random_realization, solver_scenario, unit_noise_scenario


class TestSettings:
    def test_defaults(self):
        settings = PibfSettings()
        assert (settings.eps1, settings.eps2, settings.t_max) == (3e-3, 1e-3, 20)
        assert (settings.xi0, settings.omega) == (1e-5, 10.0)

    @pytest.mark.parametrize("omega", [1.0, 0.5])
    def test_escalation_must_grow(self, omega):
        with pytest.raises(ValidationError):
            PibfSettings(omega=omega)

    def test_rejects_non_positive_tolerance(self):
        with pytest.raises(ValidationError):
            PibfSettings(eps1=0.0)


def test_random_aux_range():
    scenario = unit_noise_scenario()
    noise = EffectiveNoise(terminals=np.array([2.0]), aerial=3.0)
    draws = random_aux(scenario, noise, 500, np.random.default_rng(0))
    assert draws.min() >= 0.0
    assert draws.max() <= np.log(30.0)


class TestRestoreAerialFloor:
    def test_scales_terrestrial_beams_down(self):
        scenario = unit_noise_scenario()
        ch = hand_realization(g_aer=[1.0, 0.0], h_aer=[[1.0, 0.0]])
        noise = EffectiveNoise(terminals=np.array([1.0]), aerial=1.0)
        bf = BeamformerSet(v=[np.sqrt(2.0), 0.0], w=[[2.0, 0.0]])
        # SINR 2 / (1 + 4) misses beta = 1; leak must drop to 1
        fixed = restore_aerial_floor(scenario, ch, bf, noise)
        np.testing.assert_allclose(fixed.w, [[1.0, 0.0]])
        assert aerial_sinr(ch, fixed, noise) == pytest.approx(1.0)

    def test_untouched_when_floor_holds(self):
        scenario = unit_noise_scenario()
        ch = hand_realization(g_aer=[1.0, 0.0])
        bf = BeamformerSet(v=[2.0, 0.0], w=[[1.0, 0.0]])
        assert restore_aerial_floor(scenario, ch, bf, EffectiveNoise(np.array([1.0]), 1.0)) is bf

    def test_untouched_in_tcssa(self):
        scenario = unit_noise_scenario(mode="TCSSA")
        ch = hand_realization(g_aer=[1.0, 0.0], h_aer=[[1.0, 0.0]])
        bf = BeamformerSet(v=[0.1, 0.0], w=[[2.0, 0.0]])
        assert restore_aerial_floor(scenario, ch, bf, EffectiveNoise(np.array([1.0]), 1.0)) is bf


class TestFitToBudgets:
    def test_cell_budget_shared_by_its_terminals(self):
        scenario = unit_noise_scenario(per_cell=2)
        ch = hand_realization(per_cell=2)
        fitted = fit_to_budgets(scenario, ch, BeamformerSet(v=[0.5, 0.0], w=[[1.0, 0.0], [0.0, 1.0]]))
        powers, aerial = transmit_powers(fitted)
        np.testing.assert_allclose(powers, [0.5, 0.5])
        assert aerial == pytest.approx(0.25)

    def test_aerial_budget(self):
        scenario = unit_noise_scenario()
        fitted = fit_to_budgets(scenario, hand_realization(), BeamformerSet(v=[2.0, 0.0], w=[[0.0, 0.5]]))
        np.testing.assert_allclose(fitted.v, [1.0, 0.0])
        np.testing.assert_allclose(fitted.w, [[0.0, 0.5]])

    def test_satellite_cap(self):
        scenario = unit_noise_scenario()
        ch = hand_realization(h_sat=[[2.0, 0.0]])
        # 0.64 W is inside the budget but leaks 2.56 W against a 1 W cap
        fitted = fit_to_budgets(scenario, ch, BeamformerSet(v=[0.0, 0.0], w=[[0.8, 0.0]]))
        np.testing.assert_allclose(fitted.w, [[0.5, 0.0]])
        assert satellite_interference(ch, fitted) == pytest.approx(1.0)

    def test_untouched_inside_every_limit(self):
        scenario = unit_noise_scenario()
        bf = BeamformerSet(v=[0.5, 0.0], w=[[0.0, 0.5]])
        assert fit_to_budgets(scenario, hand_realization(h_sat=[[1.0, 0.0]]), bf) is bf


class TestCheckAscent:
    def test_accepts_chain_within_tolerance(self):
        check_ascent(1.0, 1.0 - 0.5 * CHAIN_TOL, 1.0 - CHAIN_TOL)
        check_ascent(1.0, 2.0, 3.0)

    def test_surrogate_below_anchor_merit(self):
        with pytest.raises(NumericalFailure, match="outer=2 inner=3"):
            check_ascent(1.0, 1.0 - 1e-4, 1.5, outer=2, inner=3)

    def test_merit_below_surrogate(self):
        with pytest.raises(NumericalFailure):
            check_ascent(1.0, 1.2, 1.2 - 1e-4)


@pytest.mark.slow
class TestInitialize:
    def test_starting_point_is_feasible(self):
        scenario = solver_scenario()
        ch = random_realization(41)
        it = initialize(scenario, ch, rng=np.random.default_rng(0))
        assert check_constraints(scenario, ch, it, tol=1e-4).feasible
        assert it.u.shape == (2,)
        assert it.u_aerial is None

    def test_tcssa_carries_aerial_auxiliary(self):
        scenario = solver_scenario("TCSSA")
        it = initialize(scenario, random_realization(42), rng=np.random.default_rng(0))
        assert it.u_aerial is not None and np.isfinite(it.u_aerial)


@pytest.mark.slow
class TestRunPibf:
    @pytest.fixture(scope="class")
    def outcome(self):
        scenario = solver_scenario()
        ch = random_realization(43)
        return scenario, ch, run_pibf(scenario, ch, rng=np.random.default_rng(0))

    def test_reaches_rank_one(self, outcome):
        _, _, result = outcome
        assert result.status == "ok", result.message
        assert result.trace.outer_penalties[-1] < PibfSettings().eps2

    def test_inner_objective_never_decreases(self, outcome):
        _, _, result = outcome
        for phis in result.trace.phi_by_outer().values():
            for before, after in zip(phis, phis[1:]):
                assert after >= before - CHAIN_TOL

    def test_merit_bounds_surrogate(self, outcome):
        _, _, result = outcome
        for row in result.trace.rows:
            assert row["mu"] >= row["phi"] - CHAIN_TOL

    def test_penalty_factor_escalates(self, outcome):
        _, _, result = outcome
        xis = [row["xi"] for row in result.trace.rows]
        assert xis[0] == pytest.approx(1e-5)
        assert all(b >= a for a, b in zip(xis, xis[1:]))

    def test_deployable_beams_are_feasible(self, outcome):
        scenario, ch, result = outcome
        assert result.feasible
        assert check_constraints(scenario, ch, result.beamformers).feasible
        assert result.aerial_rate >= scenario.aerial_rate_floor - 1e-4
        assert penalty_F(result.beamformers.lift()) < 1e-9

    def test_counts_match_trace(self, outcome):
        _, _, result = outcome
        assert result.inner_iterations == len(result.trace.rows)
        assert result.outer_iterations == len(result.trace.outer_penalties)
        assert sum(result.trace.inner_counts()) == result.inner_iterations

    def test_tcssa_variant(self):
        scenario = solver_scenario()
        ch = random_realization(44)
        result = run_pibf_tcssa(scenario, ch, rng=np.random.default_rng(0))
        assert result.mode == "TCSSA"
        assert result.status in ("ok", "not_converged")
        if result.status == "ok":
            assert check_constraints(scenario.with_updates(mode="TCSSA"), ch, result.beamformers).feasible


def default_trial(config, trial=0, **updates):
    scenario = config.scenario.with_updates(**updates) if updates else config.scenario
    return scenario, draw_realization([2024, trial], scenario)


@pytest.mark.slow
class TestDefaultScenario:
    @pytest.fixture(scope="class")
    def outcome(self, default_config):
        scenario, ch = default_trial(default_config)
        return run_pibf(scenario, ch, default_config.pibf, scheme_rng(2024, 0, "PIBF"))

    def test_run_is_numerically_sound(self, outcome):
        assert outcome.status in ("ok", "not_converged"), outcome.message
        assert outcome.trace.rows

    def test_merit_never_below_surrogate(self, outcome):
        for row in outcome.trace.rows:
            assert row["mu"] >= row["phi"] - CHAIN_TOL

    def test_surrogate_never_below_anchor_merit(self, outcome):
        rows = outcome.trace.rows
        for before, after in zip(rows, rows[1:]):
            if after["outer"] == before["outer"]:
                # same penalty factor, so the previous row's merit is the anchor's merit
                assert after["phi"] >= before["mu"] - CHAIN_TOL

    def test_unreachable_floor_is_infeasible(self, default_config):
        scenario, ch = default_trial(default_config, aerial_rate_floor=40.0)
        noise = effective_noise(ch, scenario.noise_power)
        # even the full aerial budget with no terrestrial leakage misses the floor
        best = scenario.aerial_power_budget * np.linalg.norm(ch.g_aer) ** 2 / noise.aerial
        assert best < scenario.beta_floor
        with pytest.raises(InfeasibleError):
            initialize(scenario, ch, default_config.pibf, np.random.default_rng(0))
        result = run_pibf(scenario, ch, default_config.pibf, np.random.default_rng(0))
        assert result.status == "infeasible"
        assert not result.feasible

    def test_tiny_budgets_without_floor(self, default_config):
        scenario, ch = default_trial(
            default_config,
            aerial_rate_floor=0.0,
            bs_power_budgets=[1e-9] * default_config.scenario.n_cells,
            aerial_power_budget=1e-9,
        )
        it = initialize(scenario, ch, default_config.pibf, np.random.default_rng(0))
        assert check_constraints(scenario, ch, it, tol=1e-4).feasible
        result = run_pibf(scenario, ch, default_config.pibf, np.random.default_rng(0))
        assert result.status == "ok", result.message
        assert check_constraints(scenario, ch, result.beamformers).feasible
        powers, aerial = transmit_powers(result.beamformers)
        assert powers.sum() <= 2e-9 * default_config.scenario.n_cells
        assert aerial <= 1e-9 * (1 + 1e-9)
