"""Seeded samplers for the three small-scale fading laws of the network."""

from __future__ import annotations

import math

import numpy as np

from src.channel.geometry import beam_gain, db_to_linear, los_path_loss_db, nlos_path_loss_db
from src.channel.params import FadingParams
from src.errors import InvalidArgumentError


def complex_gaussian(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Circular complex Gaussian entries with unit variance."""
    return (rng.standard_normal(dim) + 1j * rng.standard_normal(dim)) / math.sqrt(2.0)


def sample_rician(
    rng: np.random.Generator,
    los_direction: np.ndarray,
    d: float,
    f: float,
    kappa: float,
) -> np.ndarray:
    """Rician vector around ``los_direction``; ``kappa = inf`` gives the pure LoS response."""
    if kappa <= 0:
        raise InvalidArgumentError(f"Rician factor must be > 0, got {kappa}")
    scale = math.sqrt(1.0 / db_to_linear(los_path_loss_db(d, f)))
    los = np.asarray(los_direction, dtype=complex)
    if math.isinf(kappa):
        return scale * los
    nlos = complex_gaussian(rng, los.size)
    return scale * (math.sqrt(kappa / (1.0 + kappa)) * los + math.sqrt(1.0 / (1.0 + kappa)) * nlos)


def sample_rayleigh(rng: np.random.Generator, dim: int, d: float, f: float) -> np.ndarray:
    if dim < 1:
        raise InvalidArgumentError(f"channel dimension must be >= 1, got {dim}")
    scale = math.sqrt(1.0 / db_to_linear(nlos_path_loss_db(d, f)))
    return scale * complex_gaussian(rng, dim)


def shadowed_rician_fading(rng: np.random.Generator, dim: int, params: FadingParams) -> np.ndarray:
    """Unit-free SR entries: Nakagami-m LoS amplitude, uniform phase, Gaussian scatter of power 2b."""
    if math.isinf(params.m):
        amplitude = np.full(dim, math.sqrt(params.omega))
    else:
        amplitude = np.sqrt(rng.gamma(shape=params.m, scale=params.omega / params.m, size=dim))
    phase = rng.uniform(0.0, 2.0 * np.pi, dim)
    scatter = math.sqrt(2.0 * params.b) * complex_gaussian(rng, dim)
    return amplitude * np.exp(1j * phase) + scatter


def sample_shadowed_rician(
    rng: np.random.Generator,
    dim: int,
    d: float,
    f: float,
    phi_deg: float,
    params: FadingParams,
) -> np.ndarray:
    """Satellite channel: LoS path loss and beam gain applied to i.i.d. SR entries."""
    if dim < 1:
        raise InvalidArgumentError(f"channel dimension must be >= 1, got {dim}")
    gain = beam_gain(phi_deg, params.phi_3db_deg, params.b_max)
    scale = math.sqrt(gain / db_to_linear(los_path_loss_db(d, f)))
    return scale * shadowed_rician_fading(rng, dim, params)
