"""One random draw of every channel vector in the network."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np

from src.channel.fading import sample_rayleigh, sample_rician, sample_shadowed_rician
from src.channel.geometry import steering_vector
from src.channel.params import departure_angle, distance

if TYPE_CHECKING:
    from src.network.scenario import ScenarioConfig

logger = logging.getLogger(__name__)

# Stable link-class codes; part of the random-stream key, never renumber.
LINK_CODES: dict[str, int] = {
    "h_sat": 1,
    "h_aer": 2,
    "h_ter": 3,
    "g_sat": 4,
    "g_aer": 5,
    "g_ter": 6,
    "f_aer": 7,
    "f_ter": 8,
    "f_sat": 9,
}


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """All channel vectors of one trial (linear scale, complex amplitudes).

    Terminals are indexed flat in (cell, k) order; ``cell_of[j]`` is the serving cell of terminal j.
    ``h_ter[n, j]`` is the channel from the BS of cell n to terminal j.
    """

    h_sat: np.ndarray   # (N, M_G)   BS n -> satellite terminal
    h_aer: np.ndarray   # (N, M_G)   BS n -> aerial user
    h_ter: np.ndarray   # (N, K, M_G)
    g_sat: np.ndarray   # (M_A,)
    g_aer: np.ndarray   # (M_A,)
    g_ter: np.ndarray   # (K, M_A)
    f_aer: np.ndarray   # (M_S,)
    f_ter: np.ndarray   # (K, M_S)
    f_sat: np.ndarray   # (M_S,)
    u: np.ndarray       # (M_S,) satellite beamformer
    cell_of: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        for name in self.__dataclass_fields__:
            frozen = np.array(getattr(self, name))
            frozen.setflags(write=False)
            object.__setattr__(self, name, frozen)

    @property
    def n_cells(self) -> int:
        return self.h_sat.shape[0]

    @property
    def n_terminals(self) -> int:
        return self.h_ter.shape[1]

    def direct(self, j: int) -> np.ndarray:
        """Channel from the serving BS to terminal j."""
        return self.h_ter[self.cell_of[j], j]

    def cross(self, i: int, j: int) -> np.ndarray:
        """Channel carrying the beam of terminal i to terminal j."""
        return self.h_ter[self.cell_of[i], j]


def link_rng(seed: int | Sequence[int], link: str, *index: int) -> np.random.Generator:
    """Counter-based stream keyed by (seed..., link class, indices)."""
    key = [int(s) for s in np.atleast_1d(seed)] + [LINK_CODES[link], *index]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


def draw_realization(seed: int | Sequence[int], scenario: "ScenarioConfig") -> ChannelRealization:
    """Sample every link with the fading law of its class and build the satellite beamformer."""
    geo = scenario.geometry
    fading = scenario.fading
    f_ghz = geo.carrier_ghz
    angles = geo.beam_angles_deg
    m_g, m_a, m_s = scenario.antennas_ground, scenario.antennas_aerial, scenario.antennas_satellite
    terminals = geo.terminal_positions
    n_cells, n_terms = scenario.n_cells, len(terminals)

    h_sat = np.empty((n_cells, m_g), dtype=complex)
    h_aer = np.empty((n_cells, m_g), dtype=complex)
    h_ter = np.empty((n_cells, n_terms, m_g), dtype=complex)
    for n, bs in enumerate(geo.base_stations):
        h_sat[n] = sample_rayleigh(
            link_rng(seed, "h_sat", n), m_g, distance(bs, geo.satellite_terminal), f_ghz
        )
        los = steering_vector(departure_angle(bs, geo.aerial_user, geo.array_axis), m_g, geo.separation_ratio)
        h_aer[n] = sample_rician(
            link_rng(seed, "h_aer", n), los, distance(bs, geo.aerial_user), f_ghz, fading.rician_factor
        )
        for j, term in enumerate(terminals):
            h_ter[n, j] = sample_rayleigh(link_rng(seed, "h_ter", n, j), m_g, distance(bs, term), f_ghz)

    abs_ = geo.aerial_bs
    g_sat = sample_rayleigh(link_rng(seed, "g_sat"), m_a, distance(abs_, geo.satellite_terminal), f_ghz)
    los = steering_vector(departure_angle(abs_, geo.aerial_user, geo.array_axis), m_a, geo.separation_ratio)
    g_aer = sample_rician(
        link_rng(seed, "g_aer"), los, distance(abs_, geo.aerial_user), f_ghz, fading.rician_factor
    )
    g_ter = np.stack([
        sample_rayleigh(link_rng(seed, "g_ter", j), m_a, distance(abs_, term), f_ghz)
        for j, term in enumerate(terminals)
    ])

    sat = geo.satellite
    f_aer = sample_shadowed_rician(
        link_rng(seed, "f_aer"), m_s, distance(sat, geo.aerial_user), f_ghz, angles.aerial_user, fading
    )
    f_ter = np.stack([
        sample_shadowed_rician(link_rng(seed, "f_ter", j), m_s, distance(sat, term), f_ghz, angles.terminals, fading)
        for j, term in enumerate(terminals)
    ])
    f_sat = sample_shadowed_rician(
        link_rng(seed, "f_sat"), m_s, distance(sat, geo.satellite_terminal), f_ghz,
        angles.satellite_terminal, fading,
    )
    u = np.sqrt(scenario.satellite_power) * f_sat / np.linalg.norm(f_sat)

    logger.debug("Drew realization for seed %s (%d cells, %d terminals)", seed, n_cells, n_terms)
    return ChannelRealization(
        h_sat=h_sat, h_aer=h_aer, h_ter=h_ter,
        g_sat=g_sat, g_aer=g_aer, g_ter=g_ter,
        f_aer=f_aer, f_ter=f_ter, f_sat=f_sat, u=u,
        cell_of=np.asarray(scenario.cell_of, dtype=int),
    )
