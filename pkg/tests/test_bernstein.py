import json
import math

import numpy as np
import pytest

from ecbc import ValidationError
from ecbc.bernstein import (
    DegreeConfig,
    EcbcCoefficients,
    bernstein_basis,
    bernstein_pmf,
    draw_degree_triple,
    ecbc_cdf,
    ecbc_partial_v,
    ecbc_partial_v_samples,
    eta_grid,
    fit_ecbc,
    select_degrees,
)
from ecbc.data import PseudoSample


def make_pseudo(n, d, seed):
    rng = np.random.default_rng(seed)
    cols = [(rng.permutation(n) + 1) / (n + 1) for _ in range(d)]
    roles = ("response-1", "response-2", "covariate")[3 - d :]
    return PseudoSample(values=np.column_stack(cols), roles=roles)


class TestBernsteinPmf:
    def test_degree_zero(self):
        for u in (0.0, 0.3, 1.0):
            assert bernstein_pmf(0, 0, u) == 1.0

    def test_simple_value(self):
        assert bernstein_pmf(2, 1, 0.5) == pytest.approx(0.5, abs=1e-15)

    def test_against_exact_binomial(self):
        assert bernstein_pmf(30, 15, 0.5) == pytest.approx(
            math.comb(30, 15) / 2**30, abs=1e-12
        )

    def test_out_of_range_index(self):
        with pytest.raises(ValidationError):
            bernstein_pmf(3, 4, 0.5)

    def test_endpoint_limits(self):
        assert bernstein_pmf(5, 0, 0.0) == 1.0
        assert bernstein_pmf(5, 3, 0.0) == 0.0
        assert bernstein_pmf(5, 5, 1.0) == 1.0

    def test_partition_of_unity(self):
        u = np.linspace(0, 1, 101)
        for degree in (1, 7, 60, 200):
            sums = bernstein_basis(degree, u).sum(axis=1)
            np.testing.assert_allclose(sums, 1.0, atol=1e-12)


class TestDegreeSelection:
    def test_plugin_examples(self):
        cfg = select_degrees(200, policy="plugin")
        assert (cfg.l1, cfg.l2, cfg.m) == (15, 15, 16)
        cfg = select_degrees(4, policy="plugin")
        assert (cfg.l1, cfg.l2, cfg.m) == (3, 3, 4)

    def test_fixed_requires_degrees(self):
        with pytest.raises(ValidationError):
            select_degrees(100, policy="fixed")

    def test_prior_sample_reproducible(self):
        a = select_degrees(200, policy="prior-sample", seed=99, draws=10)
        b = select_degrees(200, policy="prior-sample", seed=99, draws=10)
        assert a.draw_list == b.draw_list
        assert len(a.draw_list) == 10
        assert all(l1 >= 1 and l2 >= 1 and m >= 2 for l1, l2, m in a.draw_list)

    def test_prior_concentration(self):
        # direct simulation of the hierarchy: the degree lands in
        # [n^(1/3), 2 n^(2/3)] with probability 0.9561 exactly (quadrature
        # over the mixing variable), so 1000 draws clear 0.95
        n = 200
        rng = np.random.default_rng(2)
        draws = np.array([draw_degree_triple(n, rng) for _ in range(1000)])
        lo, hi = n ** (1 / 3), 2 * n ** (2 / 3)
        for col in range(2):
            frac = np.mean((draws[:, col] >= lo) & (draws[:, col] <= hi))
            assert frac > 0.95

    def test_invalid_config(self):
        with pytest.raises(ValidationError):
            DegreeConfig(l1=0, l2=3, m=4)
        with pytest.raises(ValidationError):
            DegreeConfig(l1=1, l2=1, m=1)


class TestFitEcbc:
    def test_single_observation_product_grid(self):
        pseudo = PseudoSample(values=np.array([[0.5, 0.5]]), roles=("r", "c"))
        coeffs = fit_ecbc(pseudo, (4, 3))
        g = np.arange(5) / 4
        m = np.arange(4) / 3
        np.testing.assert_allclose(coeffs.theta, np.outer(g, m), atol=1e-15)

    def test_two_point_comonotone_grid(self):
        pseudo = PseudoSample(values=np.array([[1 / 3, 1 / 3], [2 / 3, 2 / 3]]), roles=("r", "c"))
        coeffs = fit_ecbc(pseudo, (2, 2))
        np.testing.assert_allclose(coeffs.theta[1], [0.0, 0.5, 0.5])
        np.testing.assert_allclose(coeffs.theta[2], [0.0, 0.5, 1.0])

    def test_zero_index_slices_vanish(self):
        coeffs = fit_ecbc(make_pseudo(12, 3, 0), (5, 4, 3))
        assert np.abs(coeffs.theta[0]).max() == 0.0
        assert np.abs(coeffs.theta[:, 0]).max() == 0.0
        assert np.abs(coeffs.theta[:, :, 0]).max() == 0.0

    def test_validates_invariants(self):
        coeffs = fit_ecbc(make_pseudo(25, 3, 1), (6, 5, 4))
        coeffs.validate()  # should not raise

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            fit_ecbc(make_pseudo(10, 2, 2), (3, 3, 3))


class TestEcbcCdf:
    def test_product_copula_exact(self):
        pseudo = PseudoSample(values=np.array([[0.5, 0.5, 0.5]]))
        coeffs = fit_ecbc(pseudo, (3, 4, 5))
        rng = np.random.default_rng(3)
        for _ in range(20):
            u = rng.random(3)
            assert ecbc_cdf(coeffs, u) == pytest.approx(np.prod(u), abs=1e-13)

    def test_top_corner(self):
        coeffs = fit_ecbc(make_pseudo(15, 3, 4), (4, 4, 4))
        assert ecbc_cdf(coeffs, (1.0, 1.0, 1.0)) == pytest.approx(1.0, abs=1e-13)

    def test_against_naive_triple_sum(self):
        coeffs = fit_ecbc(make_pseudo(20, 3, 5), (5, 6, 4))
        theta = coeffs.theta
        rng = np.random.default_rng(6)

        def naive(u):
            total = 0.0
            for h1 in range(6):
                for h2 in range(7):
                    for k in range(5):
                        total += (
                            theta[h1, h2, k]
                            * math.comb(5, h1) * u[0] ** h1 * (1 - u[0]) ** (5 - h1)
                            * math.comb(6, h2) * u[1] ** h2 * (1 - u[1]) ** (6 - h2)
                            * math.comb(4, k) * u[2] ** k * (1 - u[2]) ** (4 - k)
                        )
            return total

        for _ in range(100):
            u = rng.random(3)
            assert ecbc_cdf(coeffs, u) == pytest.approx(naive(u), abs=1e-12)

    def test_frechet_hoeffding_bounds(self):
        coeffs = fit_ecbc(make_pseudo(30, 3, 7), (6, 6, 5))
        rng = np.random.default_rng(8)
        for _ in range(200):
            u = rng.random(3)
            val = ecbc_cdf(coeffs, u)
            assert val <= u.min() + 1e-12
            assert val >= max(u.sum() - 2, 0.0) - 1e-12

    def test_domain_check(self):
        coeffs = fit_ecbc(make_pseudo(5, 2, 9), (2, 2))
        with pytest.raises(ValidationError):
            ecbc_cdf(coeffs, (0.5, 1.5))


class TestEcbcPartialV:
    def test_product_copula_all_v(self):
        pseudo = PseudoSample(values=np.array([[0.5, 0.5, 0.5]]))
        coeffs = fit_ecbc(pseudo, (3, 3, 4))
        for v in (0.0, 0.25, 0.7, 1.0):
            assert ecbc_partial_v(coeffs, (0.3, 0.8), v) == pytest.approx(0.24, abs=1e-13)

    def test_zero_response_coordinate(self):
        coeffs = fit_ecbc(make_pseudo(10, 3, 10), (4, 4, 4))
        assert ecbc_partial_v(coeffs, (0.0, 0.6), 0.5) == pytest.approx(0.0, abs=1e-14)
        assert ecbc_partial_v(coeffs, (0.6, 0.0), 0.5) == pytest.approx(0.0, abs=1e-14)

    def test_matches_finite_differences(self):
        coeffs = fit_ecbc(make_pseudo(40, 3, 11), (7, 7, 8))
        rng = np.random.default_rng(12)
        eps = 1e-5
        for _ in range(100):
            u = rng.random(2)
            v = 0.05 + 0.9 * rng.random()
            ana = ecbc_partial_v(coeffs, u, v)
            num = (
                ecbc_cdf(coeffs, (*u, v + eps)) - ecbc_cdf(coeffs, (*u, v - eps))
            ) / (2 * eps)
            assert ana == pytest.approx(num, abs=1e-6)

    def test_integrates_back_to_cdf_increment(self):
        coeffs = fit_ecbc(make_pseudo(25, 3, 13), (6, 5, 7))
        nodes, weights = np.polynomial.legendre.leggauss(129)
        v = (nodes + 1) / 2
        w = weights / 2
        rng = np.random.default_rng(14)
        for _ in range(10):
            u = rng.random(2)
            integral = sum(
                wi * ecbc_partial_v(coeffs, u, vi) for vi, wi in zip(v, w)
            )
            increment = ecbc_cdf(coeffs, (*u, 1.0)) - ecbc_cdf(coeffs, (*u, 0.0))
            assert integral == pytest.approx(increment, abs=1e-8)

    def test_difference_coefficients_nonnegative(self):
        for d, degs in ((2, (5, 6)), (3, (5, 4, 6))):
            coeffs = fit_ecbc(make_pseudo(30, d, 15), degs)
            assert coeffs.derivative_coefficients().min() >= 0.0

    def test_samples_match_scalar(self):
        coeffs = fit_ecbc(make_pseudo(20, 2, 16), (5, 6))
        rng = np.random.default_rng(17)
        w = rng.random(8)
        v = rng.random(8)
        batch = ecbc_partial_v_samples(coeffs, w, v)
        for i in range(8):
            assert batch[i] == pytest.approx(ecbc_partial_v(coeffs, w[i], v[i]), abs=1e-13)


class TestEtaGrid:
    def test_corner_is_one(self):
        coeffs = fit_ecbc(make_pseudo(35, 3, 18), (8, 7, 9))
        for v in (0.0, 0.3, 0.5, 1.0):
            eta = eta_grid(coeffs, v)
            assert eta[-1, -1] == pytest.approx(1.0, abs=1e-12)

    def test_v_zero_uses_first_difference(self):
        coeffs = fit_ecbc(make_pseudo(12, 3, 19), (4, 4, 5))
        gamma = coeffs.derivative_coefficients()
        np.testing.assert_allclose(eta_grid(coeffs, 0.0), 5 * gamma[:, :, 0], atol=1e-14)

    def test_requires_trivariate(self):
        coeffs = fit_ecbc(make_pseudo(10, 2, 20), (3, 4))
        with pytest.raises(ValidationError):
            eta_grid(coeffs, 0.5)


def test_coefficients_serialization_roundtrip():
    cfg = select_degrees(20, policy="plugin", seed=3)
    coeffs = fit_ecbc(make_pseudo(20, 3, 21), cfg)
    payload = json.loads(json.dumps(coeffs.to_dict()))
    back = EcbcCoefficients.from_dict(payload)
    np.testing.assert_array_equal(coeffs.theta, back.theta)
    assert back.config == cfg
