import math

import numpy as np
import pytest

from l4dict import (
    InvalidParameterError,
    SolveConfig,
    concentration_probe,
    critical_point_residual,
    expected_gradient,
    expected_objective,
    gen_haar_orthogonal,
    l4_norm_4th,
    make_rng,
    monte_carlo_gradient,
    monte_carlo_objective,
    msp_orth,
    signed_permutation_gap,
    tan_map,
    verification_suite,
    verify_so2_equivalence,
)
from conftest import haar, random_signed_permutation


HALF_PI = math.pi / 2


class TestExpectedObjective:
    def test_recovered_pair_gives_n_regardless_of_theta(self, rng):
        d = gen_haar_orthogonal(6, rng)
        for theta in (0.05, 0.5, 0.95):
            p = 1000
            val = expected_objective(d.T, d, theta, p)
            assert val / (3 * p * theta) == pytest.approx(6.0, rel=1e-12)

    def test_signed_permutation_product_same(self, rng):
        d = gen_haar_orthogonal(5, rng)
        perm = random_signed_permutation(5, rng)
        a = perm @ d.T
        val = expected_objective(a, d, 0.3, 100)
        assert val / (3 * 100 * 0.3) == pytest.approx(5.0, rel=1e-12)

    def test_monte_carlo_agreement(self):
        rng = make_rng(515)
        a, d = gen_haar_orthogonal(10, rng), gen_haar_orthogonal(10, rng)
        rep = monte_carlo_objective(a, d, theta=0.3, p=100000, draws=5, rng=rng)
        assert rep.abs_error / rep.predicted <= 0.02
        assert rep.samples_used == 5 * 100000


class TestExpectedGradient:
    def test_recovered_pair_is_scaled_estimate(self, rng):
        # at A D = I the stretched term collapses onto A and the total
        # coefficient is 12 p theta
        d = gen_haar_orthogonal(7, rng)
        a = d.T
        p, theta = 500, 0.25
        grad = expected_gradient(a, d, theta, p)
        assert np.abs(grad - 12 * p * theta * a).max() <= 1e-9 * p

    def test_sparsity_coefficient_peaks_at_half(self):
        coeff = lambda theta: 3 * theta * (1 - theta)
        assert coeff(0.5) == max(coeff(t) for t in np.linspace(0.01, 0.99, 99))
        assert coeff(0.5) == pytest.approx(0.75)

    def test_monte_carlo_agreement(self):
        rng = make_rng(616)
        a, d = gen_haar_orthogonal(8, rng), gen_haar_orthogonal(8, rng)
        emp, pred = monte_carlo_gradient(a, d, theta=0.3, p=200000, draws=2, rng=rng)
        assert np.linalg.norm(emp - pred) / np.linalg.norm(pred) <= 0.03

    def test_consistent_with_objective_along_tangents(self, rng):
        # directional finite difference of the expected objective along a
        # tangent direction equals the inner product with the expected
        # gradient (the estimate-aligned term drops against tangents)
        a, d = gen_haar_orthogonal(5, rng), gen_haar_orthogonal(5, rng)
        theta, p, h = 0.3, 1000, 1e-5
        g = rng.standard_normal((5, 5))
        z = a @ ((g - g.T) / 2)  # tangent at a
        z /= np.linalg.norm(z)
        fd = (
            expected_objective(a + h * z, d, theta, p)
            - expected_objective(a - h * z, d, theta, p)
        ) / (2 * h)
        ip = float(np.sum(expected_gradient(a, d, theta, p) * z))
        assert abs(fd - ip) / abs(ip) <= 1e-4


class TestCriticalPoints:
    def test_signed_permutation_residual_zero(self, rng):
        assert critical_point_residual(random_signed_permutation(6, rng)) <= 1e-14

    def test_flat_2x2_residual_zero(self):
        h = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2)
        assert critical_point_residual(h) <= 1e-14

    def test_haar_draws_are_noncritical(self):
        rng = make_rng(717)
        residuals = [critical_point_residual(gen_haar_orthogonal(5, rng)) for _ in range(100)]
        assert min(residuals) > 1e-6

    def test_solver_fixed_points_are_critical(self):
        for seed in range(5):
            trace = msp_orth(haar(6, 900 + seed), np.eye(6), SolveConfig(max_iters=60))
            assert trace.converged
            assert critical_point_residual(trace.final) <= 1e-8


class TestTanMap:
    def test_zero_fixed(self):
        assert tan_map(0.0) == 0.0

    def test_quarter_pi_fixed(self):
        assert tan_map(math.pi / 4) == pytest.approx(math.pi / 4, abs=1e-12)

    def test_eighth_pi_value(self):
        assert tan_map(math.pi / 8) == pytest.approx(0.07094852730208195, abs=1e-12)

    def test_endpoints_fixed_by_branch(self):
        assert tan_map(HALF_PI) == HALF_PI
        assert tan_map(-HALF_PI) == -HALF_PI

    def test_odd_symmetry(self, rng):
        for t in rng.uniform(-1.5, 1.5, 50):
            assert tan_map(-t) == pytest.approx(-tan_map(t), abs=1e-15)

    def test_out_of_range_rejected(self):
        with pytest.raises(InvalidParameterError):
            tan_map(2.0)

    def test_iteration_converges_to_permutation_angles(self, rng):
        # from any start except the unstable quarter-pi points the iteration
        # lands on a multiple of pi/2 within 60 steps
        targets = (0.0, HALF_PI, -HALF_PI)
        starts = list(rng.uniform(-HALF_PI, HALF_PI, 200))
        starts += [math.pi / 4 + 1e-12, -math.pi / 4 - 1e-12, 1e-300, HALF_PI - 1e-9]
        for t0 in starts:
            if abs(abs(t0) - math.pi / 4) < 1e-15:
                continue
            t = t0
            for _ in range(60):
                t = tan_map(t)
            assert min(abs(t - target) for target in targets) <= 1e-9


class TestSo2Equivalence:
    def test_dense_sample(self):
        rng = make_rng(818)
        for t in rng.uniform(-HALF_PI + 1e-6, HALF_PI - 1e-6, 500):
            assert verify_so2_equivalence(float(t)) <= 1e-10

    def test_unstable_point(self):
        assert verify_so2_equivalence(math.pi / 4) <= 1e-10

    def test_sign_symmetry(self):
        assert verify_so2_equivalence(-0.7) <= 1e-10
        assert verify_so2_equivalence(0.3) <= 1e-10

    def test_near_endpoint_rejected(self):
        with pytest.raises(InvalidParameterError):
            verify_so2_equivalence(HALF_PI - 1e-9)


class TestSignedPermutationGap:
    def test_exact_permutation(self, rng):
        p = random_signed_permutation(4, rng)
        eps, dist = signed_permutation_gap(p)
        assert eps == pytest.approx(0.0, abs=1e-12)
        assert dist == pytest.approx(0.0, abs=1e-12)

    def test_small_rotation_of_permutation(self, rng):
        p = random_signed_permutation(4, rng)
        t = 0.05
        block = np.eye(4)
        block[:2, :2] = [[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]]
        w = p @ block
        eps, dist = signed_permutation_gap(w)
        assert 0 <= eps <= 1
        assert dist <= 2 * eps + 1e-9

    def test_flat_2x2_extreme(self):
        h = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2)
        eps, dist = signed_permutation_gap(h)
        assert eps == pytest.approx(0.5, abs=1e-12)
        # farthest useful case: the bound 2 eps = 1 still covers the distance
        expected_dist = (2 * (1 - 1 / np.sqrt(2)) ** 2 + 1.0) / 2
        assert dist == pytest.approx(expected_dist, abs=1e-12)
        assert dist <= 2 * eps


class TestConcentrationProbe:
    def test_deviation_decreases_with_samples(self):
        rng = make_rng(919)
        rows = concentration_probe(10, 0.3, [1000, 10000, 100000], trials=20, rng=rng)
        means = [r[1] for r in rows]
        assert means[0] > means[1] > means[2]

    def test_most_trials_improve_end_to_end(self):
        # compare per-trial deviations at the smallest and largest p
        rng = make_rng(920)
        n, theta, trials = 10, 0.3, 20
        small, large = [], []
        for p, bucket in ((1000, small), (100000, large)):
            for _ in range(trials):
                w = gen_haar_orthogonal(n, rng)
                x = (rng.random((n, p)) < theta) * rng.standard_normal((n, p))
                pred = expected_objective(w, np.eye(n), theta, p)
                bucket.append(abs(l4_norm_4th(w @ x) - pred) / (n * p))
        improved = np.mean([l <= s for s, l in zip(small, large)])
        assert improved >= 0.9

    def test_theory_scale_column(self):
        rng = make_rng(921)
        rows = concentration_probe(10, 0.3, [100, 200], trials=2, rng=rng)
        for p, _, _, scale in rows:
            assert scale == pytest.approx(0.3 * 100 * math.log(10) / p)

    def test_requires_ascending_grid(self):
        with pytest.raises(InvalidParameterError):
            concentration_probe(5, 0.3, [100, 100], trials=1, rng=make_rng(0))


def test_verification_suite_all_pass():
    checks = verification_suite(seed=42)
    assert len(checks) >= 10
    for c in checks:
        assert c.passed, f"{c.name}: {c.detail}"
