"""Value types for beamformers and their lifted (matrix) representation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from src.errors import InvalidArgumentError

HERMITIAN_TOL = 1e-9
PSD_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class BeamformerSet:
    """Aerial vector ``v`` (M_A,) and terrestrial vectors ``w`` (K, M_G), flat terminal order."""

    v: np.ndarray
    w: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "v", np.asarray(self.v, dtype=complex))
        object.__setattr__(self, "w", np.atleast_2d(np.asarray(self.w, dtype=complex)))
        if not (np.all(np.isfinite(self.v)) and np.all(np.isfinite(self.w))):
            raise InvalidArgumentError("beamformers must have finite entries")

    @classmethod
    def zeros(cls, n_terminals: int, m_aerial: int, m_ground: int) -> "BeamformerSet":
        return cls(v=np.zeros(m_aerial, complex), w=np.zeros((n_terminals, m_ground), complex))

    def scaled(self, factor: float) -> "BeamformerSet":
        return BeamformerSet(v=self.v * factor, w=self.w * factor)

    def lift(self, u: Optional[np.ndarray] = None, u_aerial: Optional[float] = None) -> "LiftedIterate":
        """Rank-one outer products ``vv^H`` and ``w w^H``."""
        return LiftedIterate(
            V=np.outer(self.v, self.v.conj()),
            W=np.einsum("ki,kj->kij", self.w, self.w.conj()),
            u=np.zeros(len(self.w)) if u is None else np.asarray(u, dtype=float),
            u_aerial=u_aerial,
        )


@dataclass(frozen=True, eq=False)
class LiftedIterate:
    """PSD matrices V (M_A x M_A), W (K, M_G, M_G) and auxiliaries u in nats.

    ``u_aerial`` is only carried when the aerial rate is part of the objective.
    """

    V: np.ndarray
    W: np.ndarray
    u: np.ndarray
    u_aerial: Optional[float] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "V", np.asarray(self.V, dtype=complex))
        object.__setattr__(self, "W", np.asarray(self.W, dtype=complex))
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float))

    @property
    def matrices(self) -> list[np.ndarray]:
        return [*self.W, self.V]

    def validate(self) -> None:
        """Raise unless every matrix is Hermitian and numerically PSD."""
        for X in self.matrices:
            scale = max(1.0, float(np.max(np.abs(X))))
            if np.max(np.abs(X - X.conj().T)) > HERMITIAN_TOL * scale:
                raise InvalidArgumentError("lifted matrix is not Hermitian")
            if scipy.linalg.eigvalsh(X)[0] < -PSD_TOL * scale:
                raise InvalidArgumentError("lifted matrix is not positive semidefinite")

    def with_aux(self, u: np.ndarray, u_aerial: Optional[float] = None) -> "LiftedIterate":
        return LiftedIterate(V=self.V, W=self.W, u=u, u_aerial=u_aerial)

    def blend(self, other: "LiftedIterate", step: float) -> "LiftedIterate":
        """Convex combination ``self + step * (other - self)`` of the matrices."""
        return LiftedIterate(
            V=self.V + step * (other.V - self.V),
            W=self.W + step * (other.W - self.W),
            u=self.u,
            u_aerial=self.u_aerial,
        )

    @classmethod
    def from_solution(
        cls, V: np.ndarray, W: list[np.ndarray] | np.ndarray, u: np.ndarray, u_aerial: Optional[float] = None
    ) -> "LiftedIterate":
        """Project raw solver output onto the Hermitian PSD cone."""
        return cls(
            V=psd_projection(np.asarray(V, dtype=complex)),
            W=np.stack([psd_projection(np.asarray(X, dtype=complex)) for X in W]),
            u=u,
            u_aerial=u_aerial,
        )


@dataclass(frozen=True)
class EffectiveNoise:
    """Noise plus satellite interference (W) at every terrestrial terminal and the aerial user."""

    terminals: np.ndarray
    aerial: float


def top_eig(X: np.ndarray) -> tuple[float, np.ndarray]:
    """Largest eigenvalue and its unit eigenvector (first index wins ties, phase fixed)."""
    values, vectors = scipy.linalg.eigh(X)
    idx = int(np.argmax(values))
    return float(values[idx]), canonical_phase(vectors[:, idx])


def canonical_phase(x: np.ndarray) -> np.ndarray:
    """Rotate ``x`` so that its largest-magnitude entry is real and positive."""
    if not np.any(x):
        return x
    anchor = x[int(np.argmax(np.abs(x)))]
    return x * (abs(anchor) / anchor)


def psd_projection(X: np.ndarray) -> np.ndarray:
    """Nearest Hermitian PSD matrix in Frobenius norm."""
    values, vectors = scipy.linalg.eigh((X + X.conj().T) / 2)
    return (vectors * np.clip(values, 0.0, None)) @ vectors.conj().T


@dataclass(frozen=True, eq=False)
class NormalizedBeamformers:
    """Unit-norm directions: aerial ``v`` (M_A,) and terrestrial ``w`` (K, M_G)."""

    v: np.ndarray
    w: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.v, dtype=complex)
        w = np.atleast_2d(np.asarray(self.w, dtype=complex))
        norms = np.concatenate([[np.linalg.norm(v)], np.linalg.norm(w, axis=1)])
        if np.any(np.abs(norms - 1.0) > 1e-10):
            raise InvalidArgumentError("normalized beamformers must have unit norm")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "w", w)

    def combine(self, powers: "PowerAllocation") -> BeamformerSet:
        """``v = sqrt(q) v_bar`` and ``w_j = sqrt(p_j) w_bar_j``."""
        return BeamformerSet(v=np.sqrt(powers.q) * self.v, w=np.sqrt(powers.p)[:, None] * self.w)


@dataclass(frozen=True, eq=False)
class PowerAllocation:
    """Aerial power ``q`` and per-terminal powers ``p`` (W)."""

    q: float
    p: np.ndarray

    def __post_init__(self) -> None:
        # clip solver round-off below zero
        object.__setattr__(self, "q", max(float(self.q), 0.0))
        object.__setattr__(self, "p", np.clip(np.asarray(self.p, dtype=float), 0.0, None))
