"""Static geometry and fading parameters of the channel model."""

from __future__ import annotations

import math
from itertools import product

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# Default link constants
DEFAULT_CARRIER_GHZ = 18.0
DEFAULT_SEPARATION_RATIO = 0.5
GEO_ALTITUDE_M = 3.5786e7
AERIAL_USER_ALTITUDE_M = 10_000.0

Point = tuple[float, float, float]


class BeamAngles(BaseModel):
    """Off-boresight angles (degrees) of each receiver class w.r.t. the satellite beam center."""

    model_config = ConfigDict(frozen=True)

    satellite_terminal: float = 0.01
    aerial_user: float = 0.4
    terminals: float = 0.8

    @field_validator("satellite_terminal", "aerial_user", "terminals")
    @classmethod
    def _non_negative(cls, value: float) -> float:
        if value < 0:
            raise ValueError(f"beam angle must be >= 0, got {value}")
        return value


class FadingParams(BaseModel):
    """Small-scale fading and satellite antenna constants."""

    model_config = ConfigDict(frozen=True)

    rician_factor: float = Field(10.0, gt=0)
    omega: float = Field(0.835, gt=0)
    b: float = Field(0.126, gt=0)
    m: float = Field(10.0, ge=1)
    b_max_db: float = 52.1
    phi_3db_deg: float = Field(0.4, gt=0)

    @property
    def b_max(self) -> float:
        """Maximal satellite gain, linear scale."""
        return 10.0 ** (self.b_max_db / 10.0)


class GeometryConfig(BaseModel):
    """Node positions (meters), carrier and array constants."""

    model_config = ConfigDict(frozen=True)

    satellite: Point = (0.0, 0.0, GEO_ALTITUDE_M)
    aerial_bs: Point = (0.0, 0.0, 0.0)
    aerial_user: Point = (0.0, 100.0, AERIAL_USER_ALTITUDE_M)
    satellite_terminal: Point = (0.0, -300.0, 0.0)
    base_stations: list[Point] = Field(default_factory=lambda: [(-250.0, 0.0, 0.0), (250.0, 0.0, 0.0)])
    terminals: list[list[Point]] = Field(
        default_factory=lambda: [
            [(-330.0, 95.0, 0.0), (-180.0, -120.0, 0.0)],
            [(170.0, 110.0, 0.0), (345.0, -60.0, 0.0)],
        ]
    )
    carrier_ghz: float = Field(DEFAULT_CARRIER_GHZ, gt=0)
    separation_ratio: float = Field(DEFAULT_SEPARATION_RATIO, gt=0)
    array_axis: Point = (1.0, 0.0, 0.0)
    beam_angles_deg: BeamAngles = Field(default_factory=BeamAngles)

    @model_validator(mode="after")
    def _check_layout(self) -> "GeometryConfig":
        if len(self.terminals) != len(self.base_stations):
            raise ValueError(
                f"{len(self.base_stations)} base stations but terminals given for "
                f"{len(self.terminals)} cells"
            )
        if any(len(cell) == 0 for cell in self.terminals):
            raise ValueError("every cell needs at least one terminal")
        if np.linalg.norm(self.array_axis) == 0:
            raise ValueError("array_axis must be nonzero")
        transmitters = [self.satellite, self.aerial_bs, *self.base_stations]
        receivers = [self.aerial_user, self.satellite_terminal, *self.terminal_positions]
        for tx, rx in product(transmitters, receivers):
            if distance(tx, rx) <= 0:
                raise ValueError(f"transmitter {tx} and receiver {rx} coincide")
        return self

    @property
    def terminal_positions(self) -> list[Point]:
        """Terminal positions flattened in (cell, index) order."""
        return [pos for cell in self.terminals for pos in cell]

    @classmethod
    def from_layout(
        cls,
        n_cells: int = 2,
        terminals_per_cell: int = 2,
        layout_seed: int = 0,
        bs_spacing: float = 500.0,
        cell_radius: float = 200.0,
        **overrides,
    ) -> "GeometryConfig":
        """BSs on a line ``bs_spacing`` apart, terminals uniform in disks around them."""
        rng = np.random.default_rng(layout_seed)
        offset = (n_cells - 1) * bs_spacing / 2.0
        stations = [(i * bs_spacing - offset, 0.0, 0.0) for i in range(n_cells)]
        terminals = []
        for bx, by, _ in stations:
            radius = cell_radius * np.sqrt(rng.uniform(0.05, 1.0, terminals_per_cell))
            angle = rng.uniform(0.0, 2 * np.pi, terminals_per_cell)
            terminals.append([
                (float(bx + r * np.cos(a)), float(by + r * np.sin(a)), 0.0)
                for r, a in zip(radius, angle)
            ])
        return cls(base_stations=stations, terminals=terminals, **overrides)


def distance(a: Point, b: Point) -> float:
    return math.dist(a, b)


def departure_angle(tx: Point, rx: Point, axis: Point) -> float:
    """Angle (radians) between the tx->rx direction and the array broadside."""
    direction = np.subtract(rx, tx, dtype=float)
    direction /= np.linalg.norm(direction)
    unit_axis = np.asarray(axis, dtype=float) / np.linalg.norm(axis)
    return float(np.arcsin(np.clip(direction @ unit_axis, -1.0, 1.0)))
