"""Closed-form risk-floor arithmetic and the information sandwich."""

import math

import numpy as np
import pytest

from lrlogit import (
    BoundInputs,
    FanoInputs,
    assemble_packing,
    bound_constants,
    delta_epsilon,
    fano_lower_bound,
    minimax_lower_bound,
    packing_log_cardinality,
    sandwich_check,
)
from lrlogit.model import cmi_upper_bound


def oracle_bound(m1, m2, r, n, sigma, span_offset=2):
    """Independent re-evaluation of the risk-floor formula."""
    c1 = 0.9 * 0.9
    c2 = math.log2(math.e) * (math.sqrt(2) - 1) / (4 * math.sqrt(2))
    c3 = 3 * (math.sqrt(2) - 1) / math.sqrt(8) * math.log2(3 / 2)
    num = (c2 * (c1 * r * (m1 + m2 - span_offset) + c1 * (r - 1)) - c3) - 1
    return num / (8 * n * sigma * math.sqrt(2 / math.pi))


class TestConstants:
    def test_values(self):
        c1, c2, c3 = bound_constants()
        assert c1 == 0.81
        # frozen from 40-digit evaluation of the defining expressions
        np.testing.assert_allclose(c2, 0.10563889857304348, rtol=1e-15)
        np.testing.assert_allclose(c3, 0.25699732458207892, rtol=1e-15)


class TestMinimaxLowerBound:
    def test_reference_value(self):
        got = minimax_lower_bound(BoundInputs(10, 10, 2, 1000, 1.0))
        np.testing.assert_allclose(got.value, oracle_bound(10, 10, 2, 1000, 1.0),
                                   rtol=1e-12)
        # frozen from 40-digit evaluation: 2.9907215896794594e-4
        np.testing.assert_allclose(got.value, 2.9907215896794594e-4, rtol=1e-9)
        assert not got.vacuous

    def test_doubling_n_halves_exactly(self):
        a = minimax_lower_bound(BoundInputs(10, 10, 2, 1000, 1.0)).value
        b = minimax_lower_bound(BoundInputs(10, 10, 2, 2000, 1.0)).value
        assert b == a / 2

    def test_sigma_scaling_exact(self):
        a = minimax_lower_bound(BoundInputs(10, 10, 2, 1000, 1.0)).value
        b = minimax_lower_bound(BoundInputs(10, 10, 2, 1000, 2.0)).value
        assert b == a / 2

    def test_vacuous_at_tiny_dimensions(self):
        got = minimax_lower_bound(BoundInputs(2, 2, 2, 1, 1.0))
        assert got.vacuous and got.value == 0.0 and got.numerator <= 0.0

    def test_variant_changes_span(self):
        thm = minimax_lower_bound(BoundInputs(10, 10, 2, 1000, 1.0, variant="theorem"))
        app = minimax_lower_bound(BoundInputs(10, 10, 2, 1000, 1.0, variant="appendix"))
        np.testing.assert_allclose(app.value,
                                   oracle_bound(10, 10, 2, 1000, 1.0, span_offset=1),
                                   rtol=1e-12)
        assert app.value > thm.value

    def test_input_validation(self):
        with pytest.raises(ValueError):
            BoundInputs(10, 10, 1, 100, 1.0)
        with pytest.raises(ValueError):
            BoundInputs(10, 10, 11, 100, 1.0)
        with pytest.raises(ValueError):
            BoundInputs(10, 10, 2, 0, 1.0)
        with pytest.raises(ValueError):
            BoundInputs(10, 10, 2, 100, 1.0, variant="bogus")


class TestPackingLogCardinality:
    def test_reference_values(self):
        cards = packing_log_cardinality(10, 10, 2)
        np.testing.assert_allclose(cards.exponent_appendix, 10.516240334343828,
                                   rtol=1e-12)
        assert cards.log2_appendix == 10          # L = 1024
        assert cards.log2_theorem == 9            # L = 512
        assert 2**cards.log2_appendix == 1024

    def test_variant_gap_is_linear_in_r(self):
        for m1, m2, r in ((10, 10, 2), (12, 9, 4), (20, 30, 7)):
            cards = packing_log_cardinality(m1, m2, r)
            gap = cards.exponent_appendix - cards.exponent_theorem
            np.testing.assert_allclose(gap, math.log2(math.e) / 4 * 0.81 * r,
                                       rtol=1e-9)

    def test_increment_in_m1(self):
        a = packing_log_cardinality(10, 10, 3)
        b = packing_log_cardinality(11, 10, 3)
        np.testing.assert_allclose(
            b.exponent_appendix - a.exponent_appendix,
            math.log2(math.e) / 4 * 0.81 * 3,
            rtol=1e-9,
        )

    def test_theorem_never_exceeds_appendix(self):
        for m1, m2, r in ((5, 5, 2), (12, 12, 3), (40, 20, 6)):
            cards = packing_log_cardinality(m1, m2, r)
            assert cards.log2_theorem <= cards.log2_appendix


class TestFano:
    def test_reference_value(self):
        got = fano_lower_bound(FanoInputs(L=1024, p_err=1 / math.sqrt(2)))
        np.testing.assert_allclose(got, 1.9289321881345245, atol=1e-12)
        np.testing.assert_allclose(got, 1.9289, atol=1e-4)

    def test_zero_crossing(self):
        L = 64
        p = 1 - 1 / math.log2(L)
        np.testing.assert_allclose(fano_lower_bound(FanoInputs(L=L, p_err=p)),
                                   0.0, atol=1e-12)

    def test_zero_error_case(self):
        assert fano_lower_bound(FanoInputs(L=256, p_err=0.0)) == math.log2(256) - 1

    def test_monotonicity(self):
        up_l = [fano_lower_bound(FanoInputs(L=L, p_err=0.3)) for L in (4, 16, 64)]
        assert up_l == sorted(up_l)
        down_p = [fano_lower_bound(FanoInputs(L=64, p_err=p))
                  for p in (0.1, 0.4, 0.8)]
        assert down_p == sorted(down_p, reverse=True)

    def test_validation(self):
        with pytest.raises(ValueError):
            FanoInputs(L=1, p_err=0.5)
        with pytest.raises(ValueError):
            FanoInputs(L=4, p_err=1.0)


class TestDeltaEpsilon:
    def test_reference_point(self):
        delta, eps_star = delta_epsilon(2, 2.0)
        assert delta == 1.0 and eps_star == 1.0

    def test_identity_eps_star_squared_is_delta(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            r = int(rng.integers(2, 12))
            eps = float(rng.uniform(0.1, 9.0))
            delta, eps_star = delta_epsilon(r, eps)
            np.testing.assert_allclose(eps_star**2, delta, rtol=1e-12)

    def test_round_trip(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            r = int(rng.integers(2, 12))
            eps = float(rng.uniform(0.1, 9.0))
            delta, _ = delta_epsilon(r, eps)
            back = math.sqrt(8 * delta * (r - 1) / r)
            np.testing.assert_allclose(back, eps, rtol=1e-12)

    def test_separation_level(self):
        # 8*delta equals the kappa=1 distance floor eps^2*r/(r-1)
        delta, _ = delta_epsilon(5, 3.0)
        np.testing.assert_allclose(8 * delta, 3.0**2 * 5 / 4, rtol=1e-12)


@pytest.fixture(scope="module")
def packing():
    p, _ = assemble_packing(12, 12, 3, 10.0, seed=7, kappa=0.005)
    return p


class TestSandwich:
    def test_large_n_is_consistent(self, packing):
        rep = sandwich_check(packing, n=10_000, sigma=1.0)
        assert rep.consistent
        assert rep.binding == "fano"
        assert rep.L == len(packing)

    def test_u1_matches_fano_and_u2_matches_divergence(self, packing):
        rep = sandwich_check(packing, n=37, sigma=1.1)
        np.testing.assert_allclose(
            rep.u1_bits,
            fano_lower_bound(FanoInputs(L=len(packing), p_err=1 / math.sqrt(2))),
            rtol=1e-12,
        )
        np.testing.assert_allclose(
            rep.u2_nats,
            cmi_upper_bound(packing.epsilon, packing.r, 37, 1.1),
            rtol=1e-12,
        )
        np.testing.assert_allclose(rep.u2_bits, rep.u2_nats * math.log2(math.e),
                                   rtol=1e-12)

    def test_crossing_point_algebra(self, packing):
        # at n* = u1 / ((2/r)*sqrt(2/pi)*sigma*eps*log2(e)) both sides agree
        sigma = 1.0
        u1 = fano_lower_bound(FanoInputs(L=len(packing), p_err=1 / math.sqrt(2)))
        rate_bits = (2.0 / packing.r) * math.sqrt(2 / math.pi) * sigma \
            * packing.epsilon * math.log2(math.e)
        n_star = u1 / rate_bits
        u2_bits = cmi_upper_bound(packing.epsilon, packing.r, n_star, sigma) \
            * math.log2(math.e)
        np.testing.assert_allclose(u2_bits, u1, rtol=1e-9)

    def test_zero_samples_rejected(self, packing):
        with pytest.raises(ValueError):
            sandwich_check(packing, n=0, sigma=1.0)
