"""Tangent minorants, auxiliary updates and rank-one recovery."""

import numpy as np
import pytest

from src.errors import InvalidArgumentError, PreconditionError
from src.network import BeamformerSet, EffectiveNoise, LiftedIterate, penalty_F
from src.network.evaluation import satellite_interference
from src.optim import EigTangent, ExpTangent, recover_rank_one, update_aux
from tests.conftest import hand_realization, random_realization, unit_noise_scenario


def random_psd(rng, dim, rank):
    A = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    return A @ A.conj().T


def random_lifted(rng, rank=3):
    return LiftedIterate(
        V=random_psd(rng, 4, rank),
        W=np.stack([random_psd(rng, 3, rank) for _ in range(2)]),
        u=np.zeros(2),
    )


class TestExpTangent:
    @pytest.mark.parametrize("point", [-3.0, 0.0, 1.5])
    def test_minorant_on_grid(self, point):
        tangent = ExpTangent(np.array(point))
        grid = np.linspace(-5.0, 5.0, 201)
        assert np.all(tangent.value(grid) <= np.exp(grid) * (1 + 1e-12))

    def test_exact_at_expansion_point(self):
        tangent = ExpTangent(np.array([0.3, -2.0]))
        np.testing.assert_allclose(tangent.value(np.array([0.3, -2.0])), np.exp([0.3, -2.0]))

    def test_slope(self):
        assert float(ExpTangent(np.array(0.0)).slope) == 1.0


class TestEigTangent:
    def test_tangent_at_anchor(self):
        anchor = random_lifted(np.random.default_rng(0))
        eig = EigTangent.at(anchor)
        assert eig.penalty(anchor) == pytest.approx(penalty_F(anchor), rel=1e-10)

    def test_upper_bounds_penalty(self):
        rng = np.random.default_rng(1)
        anchor = random_lifted(rng)
        eig = EigTangent.at(anchor)
        for _ in range(20):
            sample = random_lifted(rng, rank=2)
            assert eig.penalty(sample) >= penalty_F(sample) - 1e-9

    def test_eta_bar_is_linear(self):
        rng = np.random.default_rng(2)
        eig = EigTangent.at(random_lifted(rng))
        X, Y = random_psd(rng, 3, 2), random_psd(rng, 3, 1)
        assert eig.eta_bar(0, X + 2 * Y) == pytest.approx(eig.eta_bar(0, X) + 2 * eig.eta_bar(0, Y))


class TestUpdateAux:
    def test_noise_only_gives_zero(self):
        ch = hand_realization(h_ter=[[[1.0, 0.0]]])
        it = BeamformerSet.zeros(1, 2, 2).lift()
        u, u_aerial = update_aux(ch, it, EffectiveNoise(terminals=np.array([1.0]), aerial=1.0))
        np.testing.assert_allclose(u, [0.0])
        assert u_aerial is None

    def test_tight_at_e(self):
        ch = hand_realization()
        it = BeamformerSet.zeros(1, 2, 2).lift()
        u, u_aerial = update_aux(ch, it, EffectiveNoise(terminals=np.array([np.e]), aerial=np.e), with_aerial=True)
        np.testing.assert_allclose(u, [1.0])
        assert u_aerial == pytest.approx(1.0)

    def test_includes_interference(self):
        ch = hand_realization(g_ter=[[1.0, 0.0]])
        it = BeamformerSet(v=[np.sqrt(np.e - 1.0), 0.0], w=[[1.0, 0.0]]).lift()
        u, _ = update_aux(ch, it, EffectiveNoise(terminals=np.array([1.0]), aerial=1.0))
        np.testing.assert_allclose(u, [1.0])

    def test_rejects_zero_noise(self):
        ch = hand_realization()
        with pytest.raises(InvalidArgumentError):
            update_aux(ch, BeamformerSet.zeros(1, 2, 2), EffectiveNoise(terminals=np.array([0.0]), aerial=1.0))


class TestRecoverRankOne:
    def test_exact_rank_one_round_trip(self):
        rng = np.random.default_rng(4)
        bf = BeamformerSet(
            v=rng.standard_normal(3) + 1j * rng.standard_normal(3),
            w=rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3)),
        )
        recovered = recover_rank_one(bf.lift())
        assert abs(np.vdot(recovered.v, bf.v)) == pytest.approx(np.linalg.norm(bf.v) ** 2, rel=1e-9)
        for got, want in zip(recovered.w, bf.w):
            assert abs(np.vdot(got, want)) == pytest.approx(np.linalg.norm(want) ** 2, rel=1e-9)

    def test_zero_matrices_give_zero_beams(self):
        recovered = recover_rank_one(BeamformerSet.zeros(2, 3, 3).lift())
        assert not np.any(recovered.v)
        assert not np.any(recovered.w)

    def test_requires_small_penalty(self):
        it = LiftedIterate(V=np.eye(2), W=np.zeros((1, 2, 2)), u=np.zeros(1))
        with pytest.raises(PreconditionError):
            recover_rank_one(it, eps2=1e-3)

    def test_near_rank_one_keeps_satellite_interference(self):
        rng = np.random.default_rng(61)
        scenario = unit_noise_scenario(cells=2, antennas=3)
        ch = random_realization(61)
        bf = BeamformerSet(
            v=rng.standard_normal(3) + 1j * rng.standard_normal(3),
            w=rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3)),
        )
        exact = bf.lift()
        it = LiftedIterate(
            V=exact.V + 1e-8 * random_psd(rng, 3, 3),
            W=exact.W + 1e-8 * np.stack([random_psd(rng, 3, 3) for _ in range(2)]),
            u=exact.u,
        )
        assert 0.0 < penalty_F(it) < 1e-3
        recovered = recover_rank_one(it)
        gap = abs(satellite_interference(ch, it) - satellite_interference(ch, recovered))
        assert gap <= 1e-4 * scenario.interference_temperature
        assert abs(np.vdot(recovered.v, bf.v)) == pytest.approx(np.linalg.norm(bf.v) ** 2, rel=1e-5)
        for got, want in zip(recovered.w, bf.w):
            assert abs(np.vdot(got, want)) == pytest.approx(np.linalg.norm(want) ** 2, rel=1e-5)
