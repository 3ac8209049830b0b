"""Configuration loading: YAML files under config/ plus environment overrides from .env."""

from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import Any

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from src.errors import ConfigError
from src.network.scenario import ScenarioConfig
from src.schemes.low_complexity import IsSettings
from src.schemes.pibf import PibfSettings

logger = logging.getLogger(__name__)

PROJECT_ROOT = Path(__file__).resolve().parent.parent
CONFIG_DIR = PROJECT_ROOT / "config"
SCENARIO_PATH = CONFIG_DIR / "scenario.yaml"
SWEEPS_PATH = CONFIG_DIR / "sweeps.yaml"

load_dotenv(PROJECT_ROOT / ".env")


class RunConfig(BaseModel):
    """Everything a run needs besides the sweep: scenario and algorithm settings."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    scenario: ScenarioConfig = Field(default_factory=ScenarioConfig)
    pibf: PibfSettings = Field(default_factory=PibfSettings)
    interference_suppression: IsSettings = Field(default_factory=IsSettings, alias="is")


def read_yaml(path: Path) -> dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"malformed YAML in {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must contain a mapping at the top level")
    return data


def load_config(path: Path = SCENARIO_PATH) -> RunConfig:
    """Load and validate a run configuration; every problem surfaces as :class:`ConfigError`."""
    data = read_yaml(Path(path))
    try:
        config = RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration in {path}:\n{e}") from e
    logger.info(
        "Loaded %s: %d cells, %d terminals, mode %s",
        path, config.scenario.n_cells, config.scenario.n_terminals, config.scenario.mode,
    )
    return config


def load_sweep_presets(path: Path = SWEEPS_PATH) -> dict[str, dict[str, Any]]:
    presets = read_yaml(Path(path)).get("sweeps", {})
    if not isinstance(presets, dict) or not presets:
        raise ConfigError(f"{path} defines no sweeps")
    return presets


def output_root() -> Path:
    return Path(os.getenv("SAGIN_OUT_DIR", str(PROJECT_ROOT / "results")))


def worker_count() -> int:
    raw = os.getenv("SAGIN_WORKERS", "1")
    try:
        workers = int(raw)
    except ValueError as e:
        raise ConfigError(f"SAGIN_WORKERS must be an integer, got {raw!r}") from e
    if workers < 1:
        raise ConfigError(f"SAGIN_WORKERS must be >= 1, got {workers}")
    return workers
