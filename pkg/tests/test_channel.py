"""Channel model: path loss, steering, beam gain, fading moments and realizations."""

import math

import numpy as np
import pytest

from src.channel.fading import (
    complex_gaussian,
    sample_rayleigh,
    sample_rician,
    shadowed_rician_fading,
)
from src.channel.geometry import (
    BEAM_CONSTANT,
    beam_gain,
    db_to_linear,
    los_path_loss_db,
    nlos_path_loss_db,
    steering_vector,
)
from src.channel.params import FadingParams, GeometryConfig
from src.channel.realization import draw_realization
from src.errors import InvalidArgumentError
from src.network.scenario import ScenarioConfig


def bessel_series(n: int, x: float, terms: int = 40) -> float:
    return sum(
        (-1) ** k / (math.factorial(k) * math.factorial(k + n)) * (x / 2.0) ** (2 * k + n)
        for k in range(terms)
    )


class TestPathLoss:
    def test_los_reference_points(self):
        assert los_path_loss_db(1.0, 1.0) == pytest.approx(28.0)
        assert los_path_loss_db(10_000.0, 18.0) == pytest.approx(141.105, abs=1e-3)
        assert los_path_loss_db(100.0, 18.0) == pytest.approx(97.105, abs=1e-3)

    def test_nlos_reference_points(self):
        assert nlos_path_loss_db(1.0, 1.0) == pytest.approx(22.7)
        assert nlos_path_loss_db(100.0, 18.0) == pytest.approx(22.7 + 73.4 + 26.0 * math.log10(18.0))
        assert nlos_path_loss_db(1000.0, 18.0) == pytest.approx(165.437, abs=1e-3)

    @pytest.mark.parametrize("d, f", [(0.0, 18.0), (-5.0, 18.0), (100.0, 0.0)])
    def test_rejects_non_positive_inputs(self, d, f):
        with pytest.raises(InvalidArgumentError):
            los_path_loss_db(d, f)
        with pytest.raises(InvalidArgumentError):
            nlos_path_loss_db(d, f)

    def test_db_to_linear(self):
        assert db_to_linear(30.0) == pytest.approx(1000.0)


class TestSteering:
    def test_broadside_is_all_ones(self):
        np.testing.assert_allclose(steering_vector(0.0, 4, 0.5), np.ones(4))

    def test_endfire_alternates(self):
        np.testing.assert_allclose(steering_vector(math.pi / 2, 2, 0.5), [1.0, -1.0], atol=1e-12)

    def test_thirty_degrees(self):
        np.testing.assert_allclose(steering_vector(math.pi / 6, 3, 0.5), [1.0, 1j, -1.0], atol=1e-12)

    def test_unit_modulus(self):
        a = steering_vector(0.37, 16, 0.5)
        np.testing.assert_allclose(np.abs(a), 1.0)
        assert np.linalg.norm(a) ** 2 == pytest.approx(16.0)

    def test_rejects_empty_array(self):
        with pytest.raises(InvalidArgumentError):
            steering_vector(0.1, 0)


class TestBeamGain:
    def test_peak_at_beam_center(self):
        assert beam_gain(0.0, 0.4, 1000.0) == 1000.0

    def test_near_center(self):
        assert 0.998 * 1000.0 <= beam_gain(0.01, 0.4, 1000.0) <= 1000.0

    def test_edge_of_coverage_is_attenuated(self):
        assert beam_gain(0.8, 0.4, 1000.0) < 0.4 * 1000.0

    @pytest.mark.parametrize("phi", [0.05, 0.2, 0.4, 0.8])
    def test_matches_series_oracle(self, phi):
        u = BEAM_CONSTANT * math.sin(math.radians(phi)) / math.sin(math.radians(0.4))
        expected = (bessel_series(1, u) / (2 * u) + 36 * bessel_series(3, u) / u**3) ** 2
        assert beam_gain(phi, 0.4, 1.0) == pytest.approx(expected, rel=1e-9)

    def test_small_argument_limit_is_continuous(self):
        tiny = beam_gain(1e-6, 0.4, 1.0)
        assert tiny == pytest.approx(1.0, abs=1e-9)

    def test_rejects_negative_angle(self):
        with pytest.raises(InvalidArgumentError):
            beam_gain(-0.1, 0.4, 1.0)


class TestFading:
    DRAWS = 100_000

    def test_complex_gaussian_unit_variance(self):
        x = complex_gaussian(np.random.default_rng(1), self.DRAWS)
        assert np.mean(np.abs(x) ** 2) == pytest.approx(1.0, rel=0.02)

    def test_rayleigh_second_moment_is_path_gain(self):
        h = sample_rayleigh(np.random.default_rng(2), self.DRAWS, 200.0, 18.0)
        expected = 1.0 / db_to_linear(nlos_path_loss_db(200.0, 18.0))
        assert np.mean(np.abs(h) ** 2) == pytest.approx(expected, rel=0.02)

    def test_rician_second_moment_is_path_gain(self):
        los = steering_vector(0.3, self.DRAWS)
        h = sample_rician(np.random.default_rng(3), los, 500.0, 18.0, 10.0)
        expected = 1.0 / db_to_linear(los_path_loss_db(500.0, 18.0))
        assert np.mean(np.abs(h) ** 2) == pytest.approx(expected, rel=0.02)

    def test_rician_infinite_factor_is_pure_los(self):
        los = steering_vector(0.3, 4)
        h = sample_rician(np.random.default_rng(4), los, 500.0, 18.0, math.inf)
        scale = math.sqrt(1.0 / db_to_linear(los_path_loss_db(500.0, 18.0)))
        np.testing.assert_allclose(h, scale * los)

    def test_shadowed_rician_second_moment(self):
        f = shadowed_rician_fading(np.random.default_rng(5), self.DRAWS, FadingParams())
        assert np.mean(np.abs(f) ** 2) == pytest.approx(0.835 + 2 * 0.126, rel=0.02)

    def test_shadowed_rician_without_shadowing(self):
        params = FadingParams(m=math.inf, b=1e-12)
        f = shadowed_rician_fading(np.random.default_rng(6), 1000, params)
        np.testing.assert_allclose(np.abs(f), math.sqrt(0.835), rtol=1e-4)


class TestRealization:
    def test_dimensions_follow_scenario(self):
        scenario = ScenarioConfig()
        ch = draw_realization([7, 0], scenario)
        assert ch.h_sat.shape == (2, 8)
        assert ch.h_ter.shape == (2, 4, 8)
        assert ch.g_ter.shape == (4, 8)
        assert ch.f_ter.shape == (4, 7)
        assert list(ch.cell_of) == [0, 0, 1, 1]

    def test_satellite_beamformer_power(self):
        ch = draw_realization([7, 0], ScenarioConfig())
        assert np.linalg.norm(ch.u) ** 2 == pytest.approx(40.0)

    def test_same_key_same_channels(self):
        scenario = ScenarioConfig()
        a, b = draw_realization([11, 3], scenario), draw_realization([11, 3], scenario)
        for name in ("h_sat", "h_aer", "h_ter", "g_ter", "f_ter", "u"):
            np.testing.assert_array_equal(getattr(a, name), getattr(b, name))

    def test_different_trial_different_channels(self):
        scenario = ScenarioConfig()
        a, b = draw_realization([11, 3], scenario), draw_realization([11, 4], scenario)
        assert not np.allclose(a.h_ter, b.h_ter)

    def test_realization_is_read_only(self):
        ch = draw_realization([1, 0], ScenarioConfig())
        with pytest.raises(ValueError):
            ch.h_ter[0, 0, 0] = 0.0

    def test_flat_indexing(self):
        scenario = ScenarioConfig()
        ch = draw_realization([1, 0], scenario)
        np.testing.assert_array_equal(ch.direct(2), ch.h_ter[1, 2])
        np.testing.assert_array_equal(ch.cross(0, 3), ch.h_ter[0, 3])

    def test_layout_generator_matches_counts(self):
        geometry = GeometryConfig.from_layout(n_cells=3, terminals_per_cell=2, layout_seed=5)
        assert [len(cell) for cell in geometry.terminals] == [2, 2, 2]
        assert len(geometry.base_stations) == 3
