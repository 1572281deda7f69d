"""Logistic model: sampling, likelihood, divergence estimates and bounds."""

import math

import numpy as np
import pytest

from lrlogit import (
    Dataset,
    assemble_packing,
    cmi_upper_bound,
    grad_neg_loglik,
    half_normal_check,
    kl_conditional,
    kl_upper_bound,
    neg_loglik,
    sample_dataset,
    sigmoid,
)
from lrlogit.model import (
    dataset_from_bytes,
    dataset_from_dict,
    dataset_to_bytes,
    dataset_to_dict,
)

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


class TestSigmoid:
    def test_reference_points(self):
        assert sigmoid(0.0) == 0.5
        np.testing.assert_allclose(sigmoid(math.log(3)), 0.75, rtol=1e-15)
        assert sigmoid(-745.0) == 0.0
        assert sigmoid(745.0) == 1.0

    def test_symmetry_is_exact(self):
        rng = np.random.default_rng(42)
        t = np.concatenate([rng.uniform(-700, 700, size=20_000), [0.0, 1e-300, -1e-300]])
        assert np.all(sigmoid(t) + sigmoid(-t) == 1.0)

    def test_monotone(self):
        t = np.linspace(-30, 30, 5001)
        assert np.all(np.diff(sigmoid(t)) >= 0)

    def test_scalar_in_scalar_out(self):
        assert isinstance(sigmoid(1.3), float)


class TestSampleDataset:
    def test_zero_coefficient_balances_responses(self):
        n = 40_000
        ds = sample_dataset(np.zeros((4, 5)), n, sigma=1.0, seed=1)
        assert abs(float(np.mean(ds.y)) - 0.5) <= 3.0 / math.sqrt(n)

    def test_covariate_variance(self):
        sigma = 1.7
        ds = sample_dataset(np.zeros((10, 10)), 1200, sigma=sigma, seed=2)
        # 120000 entries: sample variance within 2% of sigma^2
        var = float(np.var(ds.X))
        assert abs(var - sigma**2) <= 0.02 * sigma**2

    def test_inner_products_are_centered(self):
        rng = np.random.default_rng(3)
        B = rng.standard_normal((6, 7))
        n, sigma = 20_000, 1.3
        ds = sample_dataset(B, n, sigma, seed=4)
        t = ds.X_flat @ B.ravel()
        assert abs(float(np.mean(t))) <= 3 * sigma * np.linalg.norm(B) / math.sqrt(n)

    def test_bitwise_reproducible(self):
        B = np.eye(3)
        a = sample_dataset(B, 50, 1.0, seed=9)
        b = sample_dataset(B, 50, 1.0, seed=9)
        assert np.array_equal(a.X, b.X) and np.array_equal(a.y, b.y)

    def test_validation(self):
        with pytest.raises(ValueError):
            sample_dataset(np.zeros((2, 2)), 0, 1.0, seed=0)
        with pytest.raises(ValueError):
            sample_dataset(np.zeros((2, 2)), 5, 0.0, seed=0)


class TestNegLoglik:
    def test_zero_coefficient_value(self):
        ds = sample_dataset(np.ones((3, 3)), 257, 1.0, seed=5)
        np.testing.assert_allclose(neg_loglik(np.zeros((3, 3)), ds),
                                   257 * math.log(2), rtol=1e-14)

    def test_gradient_matches_central_differences(self):
        rng = np.random.default_rng(7)
        step = 1e-5
        for trial in range(20):
            m1, m2 = rng.integers(2, 6, size=2)
            n = int(rng.integers(5, 51))
            B_true = rng.standard_normal((m1, m2)) * 0.5
            ds = sample_dataset(B_true, n, 1.0, seed=100 + trial)
            B = rng.standard_normal((m1, m2)) * 0.5
            grad = grad_neg_loglik(B, ds)
            fd = np.zeros_like(grad)
            for i in range(m1):
                for j in range(m2):
                    up, dn = B.copy(), B.copy()
                    up[i, j] += step
                    dn[i, j] -= step
                    fd[i, j] = (neg_loglik(up, ds) - neg_loglik(dn, ds)) / (2 * step)
            denom = max(1.0, float(np.max(np.abs(grad))))
            assert np.max(np.abs(grad - fd)) / denom <= 1e-6

    def test_midpoint_convexity(self):
        rng = np.random.default_rng(11)
        ds = sample_dataset(rng.standard_normal((4, 4)), 60, 1.0, seed=12)
        for _ in range(25):
            A = rng.standard_normal((4, 4)) * 2
            B = rng.standard_normal((4, 4)) * 2
            mid = neg_loglik(0.5 * (A + B), ds)
            assert mid <= 0.5 * (neg_loglik(A, ds) + neg_loglik(B, ds)) + 1e-9

    def test_extreme_inner_products_stay_finite(self):
        X = np.full((3, 2, 2), 50.0)
        y = np.array([0, 1, 0], dtype=np.uint8)
        ds = Dataset(X=X, y=y, sigma=1.0, seed=0)
        val = neg_loglik(np.full((2, 2), 10.0), ds)
        assert np.isfinite(val)


@pytest.fixture(scope="module")
def packing_pairs():
    packing, _ = assemble_packing(12, 12, 3, 10.0, seed=7, kappa=0.005)
    dense = packing.dense_elements()
    rng = np.random.default_rng(21)
    pairs = []
    for _ in range(5):
        i, j = rng.choice(len(dense), size=2, replace=False)
        pairs.append((dense[i], dense[j]))
    return packing, pairs


class TestKL:
    def test_identical_hypotheses_give_exact_zero(self, packing_pairs):
        _, pairs = packing_pairs
        ds = sample_dataset(pairs[0][0], 64, 1.0, seed=13)
        rep = kl_conditional(pairs[0][0], pairs[0][0], ds)
        assert rep.mc_estimate == 0.0
        assert rep.analytic_upper == 0.0

    def test_nonnegative_and_below_ceiling(self, packing_pairs):
        _, pairs = packing_pairs
        for k, (a, b) in enumerate(pairs):
            ds = sample_dataset(a, 100, 1.0, seed=200 + k)
            rep = kl_conditional(a, b, ds)
            assert rep.mc_estimate >= -3.0 * rep.mc_stderr
            assert rep.mc_estimate <= rep.analytic_upper + 3.0 * rep.mc_stderr
            assert rep.n_samples_used == 100

    def test_ceiling_reference_value(self):
        a = np.zeros((2, 2))
        b = np.eye(2) / math.sqrt(2)  # ||a - b||_F = 1
        np.testing.assert_allclose(kl_upper_bound(a, b, 1, 1.0),
                                   0.79788456080286536, rtol=1e-12)
        assert kl_upper_bound(a, a, 5, 2.0) == 0.0

    def test_ceiling_linear_in_n_and_sigma(self):
        a, b = np.zeros((3, 3)), np.ones((3, 3))
        base = kl_upper_bound(a, b, 1, 1.0)
        np.testing.assert_allclose(kl_upper_bound(a, b, 7, 1.0), 7 * base, rtol=1e-12)
        np.testing.assert_allclose(kl_upper_bound(a, b, 1, 2.5), 2.5 * base, rtol=1e-12)


class TestHalfNormal:
    def test_agreement_at_1e5_draws(self, packing_pairs):
        _, pairs = packing_pairs
        for k, (a, b) in enumerate(pairs):
            emp, ana = half_normal_check(a, b, 1.0, 100_000, seed=300 + k)
            assert abs(emp - ana) / ana <= 0.02

    def test_zero_difference(self):
        a = np.ones((3, 3))
        emp, ana = half_normal_check(a, a, 1.0, 10_000, seed=0)
        assert emp == 0.0 and ana == 0.0

    def test_scaling_difference_scales_outputs(self):
        rng = np.random.default_rng(31)
        a = rng.standard_normal((4, 4))
        emp1, ana1 = half_normal_check(a, np.zeros_like(a), 1.0, 10_000, seed=8)
        emp3, ana3 = half_normal_check(3 * a, np.zeros_like(a), 1.0, 10_000, seed=8)
        np.testing.assert_allclose(emp3, 3 * emp1, rtol=1e-12)
        np.testing.assert_allclose(ana3, 3 * ana1, rtol=1e-12)

    def test_too_few_draws_rejected(self):
        with pytest.raises(ValueError):
            half_normal_check(np.eye(2), np.zeros((2, 2)), 1.0, 100, seed=0)


class TestCmiUpperBound:
    def test_reference_value(self):
        np.testing.assert_allclose(cmi_upper_bound(2.0, 2, 1, 1.0),
                                   1.5957691216057307, rtol=1e-12)

    def test_linear_in_each_argument(self):
        base = cmi_upper_bound(1.5, 4, 1, 1.0)
        np.testing.assert_allclose(cmi_upper_bound(3.0, 4, 1, 1.0), 2 * base, rtol=1e-12)
        np.testing.assert_allclose(cmi_upper_bound(1.5, 4, 6, 1.0), 6 * base, rtol=1e-12)
        np.testing.assert_allclose(cmi_upper_bound(1.5, 4, 1, 0.5), base / 2, rtol=1e-12)

    def test_dominates_measured_distance_chain(self, packing_pairs):
        # n*sigma*sqrt(max measured)*sqrt(2/pi) <= n*sigma*sqrt(4 r eps^2/(r-1))*sqrt(2/pi)
        packing, _ = packing_pairs
        n, sigma = 50, 1.3
        lhs = n * sigma * math.sqrt(packing.max_pairwise_sq) * SQRT_2_OVER_PI
        rhs = n * sigma * math.sqrt(
            4 * packing.r * packing.epsilon**2 / (packing.r - 1)) * SQRT_2_OVER_PI
        assert lhs <= rhs

    def test_pairwise_ceiling_from_distance_ceiling(self, packing_pairs):
        # for every pair of a verified packing the closed-form KL ceiling is
        # below n*sigma*2*sqrt(r/(r-1))*eps*sqrt(2/pi)
        packing, pairs = packing_pairs
        n, sigma = 17, 0.9
        cap = n * sigma * 2 * math.sqrt(
            packing.r / (packing.r - 1)) * packing.epsilon * SQRT_2_OVER_PI
        for a, b in pairs:
            assert kl_upper_bound(a, b, n, sigma) <= cap


class TestDatasetSerialization:
    def test_json_round_trip(self):
        ds = sample_dataset(np.eye(3), 17, 1.2, seed=6, truth_index=4)
        back = dataset_from_dict(dataset_to_dict(ds))
        assert np.array_equal(back.X, ds.X)
        assert np.array_equal(back.y, ds.y)
        assert back.sigma == ds.sigma and back.seed == ds.seed
        assert back.truth_index == 4

    def test_binary_round_trip(self):
        ds = sample_dataset(np.eye(4), 23, 0.7, seed=8)
        back = dataset_from_bytes(dataset_to_bytes(ds))
        assert np.array_equal(back.X, ds.X)
        assert np.array_equal(back.y, ds.y)
        assert back.truth_index is None
        assert back.sigma == ds.sigma

    def test_binary_layout(self):
        ds = sample_dataset(np.zeros((2, 3)), 4, 1.0, seed=1, truth_index=2)
        raw = dataset_to_bytes(ds)
        # 5 int64 + 1 float64 header, then n*m1*m2 doubles, then n bytes
        assert len(raw) == 48 + 4 * 6 * 8 + 4
        header = np.frombuffer(raw[:40], dtype="<i8")
        assert list(header) == [2, 3, 4, 1, 2]
        assert np.frombuffer(raw[40:48], dtype="<f8")[0] == 1.0
