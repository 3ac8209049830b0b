"""Shared fixtures: unit-noise scenarios, hand-built realizations and the default config."""

from __future__ import annotations

import numpy as np
import pytest

from src.channel.params import GeometryConfig
from src.channel.realization import ChannelRealization
from src.config import SCENARIO_PATH, load_config
from src.network.scenario import ScenarioConfig


def unit_noise_scenario(cells: int = 1, per_cell: int = 1, antennas: int = 2, **overrides) -> ScenarioConfig:
    """Scenario with sigma^2 = 1 W so hand-built channels can use O(1) numbers."""
    data = dict(
        terminals_per_cell=[per_cell] * cells,
        antennas_satellite=2,
        antennas_aerial=antennas,
        antennas_ground=antennas,
        bs_power_budgets=[1.0] * cells,
        aerial_power_budget=1.0,
        interference_temperature_mw=1000.0,
        aerial_rate_floor=1.0,
        boltzmann=1.0,
        noise_temperature_k=1.0,
        bandwidth_hz=1.0,
        geometry=GeometryConfig.from_layout(n_cells=cells, terminals_per_cell=per_cell),
    )
    data.update(overrides)
    return ScenarioConfig.model_validate(data)


def hand_realization(cells: int = 1, per_cell: int = 1, m_g: int = 2, m_a: int = 2, m_s: int = 2, **channels) -> ChannelRealization:
    """All-zero channels except those given."""
    K = cells * per_cell
    fields = dict(
        h_sat=np.zeros((cells, m_g)),
        h_aer=np.zeros((cells, m_g)),
        h_ter=np.zeros((cells, K, m_g)),
        g_sat=np.zeros(m_a),
        g_aer=np.zeros(m_a),
        g_ter=np.zeros((K, m_a)),
        f_aer=np.zeros(m_s),
        f_ter=np.zeros((K, m_s)),
        f_sat=np.zeros(m_s),
        u=np.zeros(m_s),
        cell_of=np.repeat(np.arange(cells), per_cell),
    )
    fields.update({k: np.asarray(v, dtype=complex) for k, v in channels.items()})
    return ChannelRealization(**fields)


def random_realization(seed: int, cells: int = 2, per_cell: int = 1, m_g: int = 3, m_a: int = 3, m_s: int = 2) -> ChannelRealization:
    """Unit-variance Gaussian channels, weak satellite interference."""
    rng = np.random.default_rng(seed)
    K = cells * per_cell

    def cn(*shape: int) -> np.ndarray:
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)

    return hand_realization(
        cells, per_cell, m_g, m_a, m_s,
        h_sat=cn(cells, m_g), h_aer=0.3 * cn(cells, m_g), h_ter=cn(cells, K, m_g),
        g_sat=cn(m_a), g_aer=cn(m_a), g_ter=0.3 * cn(K, m_a),
        f_aer=0.1 * cn(m_s), f_ter=0.1 * cn(K, m_s), f_sat=cn(m_s), u=0.5 * cn(m_s),
    )


@pytest.fixture(scope="session")
def default_config():
    return load_config(SCENARIO_PATH)


@pytest.fixture
def two_cell_scenario() -> ScenarioConfig:
    return unit_noise_scenario(cells=2, per_cell=1, antennas=3)


def solver_scenario(mode: str = "HCSSA", **overrides) -> ScenarioConfig:
    """Two cells of one terminal each with a reachable aerial floor, sized for :func:`random_realization`."""
    data = dict(cells=2, antennas=3, aerial_rate_floor=0.5, aerial_power_budget=4.0, mode=mode)
    data.update(overrides)
    return unit_noise_scenario(**data)
