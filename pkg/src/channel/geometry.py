"""Deterministic link-budget helpers: array steering, path loss and satellite beam gain."""

from __future__ import annotations

import numpy as np
from scipy.special import jv

from src.errors import InvalidArgumentError

# u = BEAM_CONSTANT * sin(phi) / sin(phi_3dB)
BEAM_CONSTANT = 2.07123


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def steering_vector(angle: float, dim: int, sep_ratio: float = 0.5) -> np.ndarray:
    """ULA response ``exp(j 2 pi (d/lambda) i sin(angle))`` for i = 0..dim-1."""
    if dim < 1:
        raise InvalidArgumentError(f"steering vector dimension must be >= 1, got {dim}")
    if sep_ratio <= 0:
        raise InvalidArgumentError(f"separation ratio must be > 0, got {sep_ratio}")
    phase = 2.0 * np.pi * sep_ratio * np.sin(angle)
    return np.exp(1j * phase * np.arange(dim))


def _check_link(d: float, f: float) -> None:
    if d <= 0 or f <= 0:
        raise InvalidArgumentError(f"distance and frequency must be positive (d={d}, f={f})")


def los_path_loss_db(d: float, f: float) -> float:
    """LoS path loss in dB for distance ``d`` (m) and carrier ``f`` (GHz)."""
    _check_link(d, f)
    return 28.0 + 22.0 * np.log10(d) + 20.0 * np.log10(f)


def nlos_path_loss_db(d: float, f: float) -> float:
    """NLoS path loss in dB for distance ``d`` (m) and carrier ``f`` (GHz)."""
    _check_link(d, f)
    return 22.7 + 36.7 * np.log10(d) + 26.0 * np.log10(f)


def beam_gain(phi_deg: float, phi_3db_deg: float, b_max: float) -> float:
    """Satellite beam gain (linear) at ``phi_deg`` off the beam center.

    ``b_max * (J1(u)/(2u) + 36 J3(u)/u^3)^2`` with the analytic limit ``b_max`` at u = 0.
    """
    if phi_deg < 0:
        raise InvalidArgumentError(f"beam angle must be >= 0, got {phi_deg}")
    if phi_3db_deg <= 0:
        raise InvalidArgumentError(f"3-dB angle must be > 0, got {phi_3db_deg}")
    u = BEAM_CONSTANT * np.sin(np.radians(phi_deg)) / np.sin(np.radians(phi_3db_deg))
    if u == 0.0:
        return float(b_max)
    if abs(u) < 1e-4:
        # J1(u)/(2u) -> 1/4 - u^2/32, 36 J3(u)/u^3 -> 3/4 - 3u^2/64
        bracket = 1.0 - 5.0 * u * u / 64.0
    else:
        bracket = jv(1, u) / (2.0 * u) + 36.0 * jv(3, u) / u**3
    return float(b_max * bracket**2)
