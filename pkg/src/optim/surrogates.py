"""Tangent minorants used by the successive convex approximation loops."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.channel.realization import ChannelRealization
from src.errors import InvalidArgumentError, PreconditionError
from src.network.evaluation import interference_levels, penalty_F
from src.network.models import BeamformerSet, EffectiveNoise, LiftedIterate, top_eig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExpTangent:
    """First-order expansion of ``exp`` at ``point``: ``e^p (u - p + 1) <= e^u``."""

    point: np.ndarray

    @property
    def slope(self) -> np.ndarray:
        return np.exp(self.point)

    def value(self, u: np.ndarray | float) -> np.ndarray:
        return self.slope * (np.asarray(u) - self.point + 1.0)


@dataclass(frozen=True)
class EigTangent:
    """Linearization of the top eigenvalue of every lifted matrix at an anchor.

    ``eta_bar(X) = theta^H X theta``, which equals ``Tr(theta theta^H (X - X0)) + eta(X0)``.
    """

    thetas: tuple[np.ndarray, ...]
    etas: tuple[float, ...]

    @classmethod
    def at(cls, anchor: LiftedIterate) -> "EigTangent":
        pairs = [top_eig(X) for X in anchor.matrices]
        return cls(thetas=tuple(t for _, t in pairs), etas=tuple(e for e, _ in pairs))

    def eta_bar(self, index: int, X: np.ndarray) -> float:
        theta = self.thetas[index]
        return float(np.real(np.vdot(theta, X @ theta)))

    def penalty(self, it: LiftedIterate) -> float:
        """Surrogate ``F_bar(it; anchor) >= F(it)``."""
        return float(sum(np.real(np.trace(X)) - self.eta_bar(i, X) for i, X in enumerate(it.matrices)))


def update_aux(
    ch: ChannelRealization,
    it: LiftedIterate | BeamformerSet,
    noise: EffectiveNoise,
    with_aerial: bool = False,
) -> tuple[np.ndarray, Optional[float]]:
    """Auxiliaries made tight: ``u = ln alpha`` for every terminal (and the aerial user on request)."""
    alpha, alpha_aerial = interference_levels(ch, it, noise)
    if np.any(alpha <= 0) or (with_aerial and alpha_aerial <= 0):
        raise InvalidArgumentError("interference-plus-noise must be positive to update auxiliaries")
    return np.log(alpha), (float(np.log(alpha_aerial)) if with_aerial else None)


def recover_rank_one(it: LiftedIterate, eps2: float = 1e-3) -> BeamformerSet:
    """Principal-eigenvector beamformers ``sqrt(eta) * theta`` of every lifted matrix."""
    violation = penalty_F(it)
    if violation >= eps2:
        raise PreconditionError(f"rank-one penalty {violation:.3e} is not below {eps2:.1e}")

    def principal(X: np.ndarray) -> np.ndarray:
        eta, theta = top_eig(X)
        return np.sqrt(max(eta, 0.0)) * theta

    return BeamformerSet(v=principal(it.V), w=np.stack([principal(W) for W in it.W]))
