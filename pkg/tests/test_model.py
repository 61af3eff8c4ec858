import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from conftest import GOLDEN, random_in_p
from lqrdp.dp import solve_optimal
from lqrdp.errors import DimensionError, DomainError, InvalidPlantError, StabilityError
from lqrdp.linalg import fixed_point_linear_solve, matrix_leq, spectral_radius
from lqrdp.model import (
    Plant,
    augment,
    closed_loop_cost,
    greedy_gain,
    in_p_set,
    is_stabilizing,
    lambda_matrix,
    partition,
    random_plant,
    scalar_plant,
    schur_value,
    simulate,
)

seeds = st.integers(0, 2**32 - 1)


class TestPlant:
    def test_dimensions(self, bench):
        assert (bench.n, bench.m) == (2, 1)

    @pytest.mark.parametrize("kw, err", [
        (dict(A=np.ones((2, 3))), DimensionError),
        (dict(B=np.ones((3, 1))), DimensionError),
        (dict(Q=np.eye(3)), DimensionError),
        (dict(R=np.eye(2)), DimensionError),
        (dict(Q=-np.eye(2)), InvalidPlantError),
        (dict(Q=[[1.0, 2.0], [0.0, 1.0]]), InvalidPlantError),
        (dict(R=[[0.0]]), InvalidPlantError),
        (dict(gamma=0.0), InvalidPlantError),
        (dict(gamma=1.5), InvalidPlantError),
        (dict(A=[[np.inf, 0], [0, 0]]), InvalidPlantError),
    ])
    def test_validation(self, kw, err):
        base = dict(A=np.eye(2), B=np.ones((2, 1)), Q=np.eye(2), R=[[1.0]], gamma=0.9)
        base.update(kw)
        with pytest.raises(err):
            Plant(**base)

    def test_immutable(self, bench):
        with pytest.raises(ValueError):
            bench.A[0, 0] = 1.0

    def test_random_plant_bounds(self):
        for seed in range(20):
            p = random_plant(seed)
            assert 1 <= p.n <= 4 and 1 <= p.m <= 2 and p.gamma in (0.8, 0.9, 1.0)


class TestAugment:
    def test_zero_gain(self, bench):
        G = augment(bench, np.zeros((1, 2)))
        assert_allclose(G[:2], np.hstack([bench.A, bench.B]))
        assert_allclose(G[2:], 0)
        assert spectral_radius(G) == pytest.approx(spectral_radius(bench.A))

    def test_optimal_radius(self, bench, bench_opt):
        rho = spectral_radius(bench.gamma ** 0.5 * augment(bench, bench_opt.Fstar))
        assert rho == pytest.approx(0.7006, abs=5e-4)

    def test_scalar(self):
        G = augment(scalar_plant(), [[-0.5]])
        assert_allclose(G, [[1, 1], [-0.5, -0.5]])
        assert spectral_radius(G) == pytest.approx(0.5)

    def test_bad_gain_shape(self, bench):
        with pytest.raises(DimensionError):
            augment(bench, np.zeros((2, 2)))


class TestLambda:
    def test_identity(self):
        p = Plant(np.eye(2), np.ones((2, 1)), np.eye(2), [[1.0]])
        assert_allclose(lambda_matrix(p), np.eye(3))

    def test_bench(self, bench):
        L = lambda_matrix(bench)
        assert_allclose(L[:2, :2], 0.1 * np.ones((2, 2)))
        assert L[2, 2] == 1000.0
        assert_allclose(L[:2, 2], 0)

    def test_scalar(self, golden):
        assert_allclose(lambda_matrix(golden), np.eye(2))


class TestBlocks:
    def test_greedy_of_lambda_is_zero(self, bench):
        assert_allclose(greedy_gain(lambda_matrix(bench), 2), 0)

    def test_greedy_of_optimum(self, bench_opt):
        assert_allclose(greedy_gain(bench_opt.Pstar, 2), [[-0.8068, -0.8912]], atol=5e-4)

    def test_golden(self):
        P = np.array([[GOLDEN + 1, GOLDEN], [GOLDEN, GOLDEN + 1]])
        assert greedy_gain(P, 1)[0, 0] == pytest.approx(-0.6180, abs=1e-4)
        assert schur_value(P, 1)[0, 0] == pytest.approx(GOLDEN, abs=1e-12)

    def test_schur_of_lambda(self, bench):
        assert_allclose(schur_value(lambda_matrix(bench), 2), bench.Q)

    def test_singular_block(self):
        P = np.diag([1.0, 0.0])
        with pytest.raises(DomainError):
            greedy_gain(P, 1)
        with pytest.raises(DomainError):
            schur_value(P, 1)

    def test_partition(self):
        P = np.arange(9.0).reshape(3, 3)
        P11, P12, P22 = partition(P, 2)
        assert P11.shape == (2, 2) and P12.shape == (2, 1) and P22.shape == (1, 1)
        with pytest.raises(DimensionError):
            partition(P, 3)

    def test_membership(self):
        assert in_p_set(np.eye(3), 2)
        assert not in_p_set(np.diag([1.0, 1.0, 0.0]), 2)
        assert not in_p_set(np.diag([1.0, -1.0, 1.0]), 2)
        # rank-one ones matrix: PSD, but its 2x2 input block is singular
        assert in_p_set(np.ones((3, 3)), 2)
        assert not in_p_set(np.ones((3, 3)), 1)


class TestStability:
    def test_optimum(self, bench, bench_opt):
        chk = is_stabilizing(bench, bench_opt.Fstar)
        assert chk and chk.radius == pytest.approx(0.7006, abs=5e-4)

    def test_null_plant(self):
        p = Plant(np.zeros((2, 2)), np.ones((2, 1)), np.eye(2), [[1.0]])
        chk = is_stabilizing(p, np.zeros((1, 2)))
        assert chk and chk.radius == 0.0

    def test_marginal(self, golden):
        chk = is_stabilizing(golden, [[0.0]])
        assert not chk and chk.radius == pytest.approx(1.0)

    def test_radius_identity(self):
        for seed in range(100):
            rng = np.random.default_rng(seed)
            p = random_plant(rng)
            F = rng.standard_normal((p.m, p.n))
            chk = is_stabilizing(p, F)
            assert abs(chk.radius - chk.augmented_radius) <= 1e-8 * (1 + chk.radius)


class TestGreedyMinimizes:
    @settings(max_examples=200, deadline=None, derandomize=True)
    @given(seeds)
    def test_greedy_minimizes(self, seed):
        rng = np.random.default_rng(seed)
        p = random_plant(rng)
        P = random_in_p(rng, p.n + p.m)
        F = rng.standard_normal((p.m, p.n))
        Gf, Gg = augment(p, F), augment(p, greedy_gain(P, p.n))
        lhs, rhs = Gg.T @ P @ Gg, Gf.T @ P @ Gf
        assert matrix_leq(lhs, rhs, 1e-8 * (1 + np.abs(rhs).max()))


class TestCost:
    def test_zero_state(self, bench, bench_opt):
        assert closed_loop_cost(bench, bench_opt.Fstar, [0, 0]) == 0.0

    def test_deadbeat(self, golden):
        assert closed_loop_cost(golden, [[-1.0]], [1.0], horizon=10) == pytest.approx(2.0)

    def test_matches_value(self, bench, bench_opt):
        J = closed_loop_cost(bench, bench_opt.Fstar, [1.0, 0.0], horizon=500)
        assert J == pytest.approx(bench_opt.Xstar[0, 0], rel=1e-6)

    def test_matches_q_parameter(self):
        for seed in range(10):
            rng = np.random.default_rng(seed)
            p = random_plant(rng)
            F = solve_optimal(p).Fstar + 0.01 * rng.standard_normal((p.m, p.n))
            assert is_stabilizing(p, F)
            G = p.gamma ** 0.5 * augment(p, F)
            P = fixed_point_linear_solve(G, lambda_matrix(p))
            z = rng.standard_normal(p.n)
            v = np.concatenate([z, F @ z])
            assert closed_loop_cost(p, F, z) == pytest.approx(v @ P @ v, rel=1e-6)

    def test_unstable_rejected(self, golden):
        with pytest.raises(StabilityError):
            closed_loop_cost(golden, [[0.5]], [1.0])

    def test_trajectory(self, golden):
        tr = simulate(golden, [[-0.5]], [1.0], 3)
        assert_allclose(tr.states[:, 0], [1, 0.5, 0.25, 0.125])
        assert_allclose(tr.inputs[:, 0], [-0.5, -0.25, -0.125])
