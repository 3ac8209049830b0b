"""Scenario configuration: antenna counts, budgets, thresholds and noise."""

from __future__ import annotations

import math
from typing import Any, Literal

from pydantic import AliasChoices, BaseModel, ConfigDict, Field, model_validator

from src.channel.params import FadingParams, GeometryConfig

MW_TO_W = 1e-3

Mode = Literal["HCSSA", "TCSSA"]


class ScenarioConfig(BaseModel):
    """Full static description of one network instance.

    File units: powers in W, interference temperature in mW, rates in bps/Hz.
    """

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    terminals_per_cell: list[int] = Field(default_factory=lambda: [2, 2])
    antennas_satellite: int = Field(7, ge=1)
    antennas_aerial: int = Field(8, ge=1)
    antennas_ground: int = Field(8, ge=1)
    interference_temperature_mw: float = Field(2e-12, gt=0)
    bs_power_budgets: list[float] = Field(default_factory=lambda: [60.0, 60.0])
    # also accepted as p0
    aerial_power_budget: float = Field(60.0, gt=0, validation_alias=AliasChoices("aerial_power_budget", "p0"))
    aerial_rate_floor: float = Field(3.0, ge=0)
    satellite_power: float = Field(40.0, gt=0)
    bandwidth_hz: float = Field(0.5e6, gt=0)
    noise_temperature_k: float = Field(300.0, gt=0)
    boltzmann: float = Field(1.38e-23, gt=0)
    mode: Mode = "HCSSA"
    geometry: GeometryConfig = Field(default_factory=GeometryConfig)
    fading: FadingParams = Field(default_factory=FadingParams)

    @model_validator(mode="after")
    def _check_consistency(self) -> "ScenarioConfig":
        if any(k < 1 for k in self.terminals_per_cell):
            raise ValueError("every cell needs at least one terminal")
        if len(self.bs_power_budgets) != self.n_cells:
            raise ValueError(
                f"{len(self.bs_power_budgets)} BS power budgets for {self.n_cells} cells"
            )
        if any(p <= 0 for p in self.bs_power_budgets):
            raise ValueError("BS power budgets must be > 0")
        layout = [len(cell) for cell in self.geometry.terminals]
        if layout != list(self.terminals_per_cell):
            raise ValueError(
                f"geometry places {layout} terminals per cell, config says {self.terminals_per_cell}"
            )
        return self

    # ------------------------------------------------------------------
    # Derived quantities
    # ------------------------------------------------------------------

    @property
    def n_cells(self) -> int:
        return len(self.terminals_per_cell)

    @property
    def n_terminals(self) -> int:
        return sum(self.terminals_per_cell)

    @property
    def cell_of(self) -> list[int]:
        return [n for n, k in enumerate(self.terminals_per_cell) for _ in range(k)]

    @property
    def interference_temperature(self) -> float:
        """Interference cap at the satellite terminal in W."""
        return self.interference_temperature_mw * MW_TO_W

    @property
    def noise_power(self) -> float:
        return self.boltzmann * self.noise_temperature_k * self.bandwidth_hz

    @property
    def beta_floor(self) -> float:
        """SINR equivalent of the aerial rate floor."""
        return math.pow(2.0, self.aerial_rate_floor) - 1.0

    @property
    def is_hierarchical(self) -> bool:
        return self.mode == "HCSSA"

    # ------------------------------------------------------------------
    # Copies
    # ------------------------------------------------------------------

    def with_updates(self, **updates: Any) -> "ScenarioConfig":
        """Validated copy with some fields replaced."""
        data = self.model_dump()
        data.update(updates)
        return ScenarioConfig.model_validate(data)

    def with_power(self, budget: float) -> "ScenarioConfig":
        """Set every BS budget and the aerial budget to ``budget`` W."""
        return self.with_updates(bs_power_budgets=[budget] * self.n_cells, aerial_power_budget=budget)
