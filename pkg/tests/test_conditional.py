import numpy as np
import pytest

from ecbc import Dataset, ValidationError
from ecbc.bernstein import DegreeConfig, fit_ecbc, select_degrees
from ecbc.conditional import (
    ConditionalCopulaEnsemble,
    ConditionalCopulaFit,
    cond_copula_derivative,
    cond_margin,
    conditional_copula_at_x,
    conditional_copula_cdf,
    conditional_copula_grid,
    conditional_marginal_cdf,
    covariate_adjust,
    fit_conditional_copula,
    invert_cond_margin,
    load_fit,
    save_fit,
)
from ecbc.data import PseudoSample, empirical_cdf_at

from conftest import clayton_dataset


def product_stage_fit():
    """Fit whose every tensor comes from a single observation (product copula)."""
    stage1 = (
        fit_ecbc(PseudoSample(np.array([[0.5, 0.5]]), roles=("r", "c")), (4, 5)),
        fit_ecbc(PseudoSample(np.array([[0.5, 0.5]]), roles=("r", "c")), (4, 5)),
    )
    stage2 = fit_ecbc(PseudoSample(np.array([[0.5, 0.5, 0.5]])), (4, 4, 5))
    return ConditionalCopulaFit(
        stage1=stage1,
        adjusted=PseudoSample(np.array([[0.5, 0.5, 0.5]])),
        stage2=stage2,
        degrees=DegreeConfig(4, 4, 5),
        covariate_sample=np.array([1.0, 2.0, 3.0, 4.0]),
        response_samples=(np.array([1.0, 2.0, 3.0, 4.0]), np.array([1.0, 2.0, 3.0, 4.0])),
    )


class TestConditionalMarginalCdf:
    def test_product_stage1_reduces_to_marginal_cdf(self):
        fit = product_stage_fit()
        for y in (0.5, 2.5, 10.0):
            for x in (0.0, 2.0, 5.0):
                expected = empirical_cdf_at(fit.response_samples[0], y)
                assert conditional_marginal_cdf(fit, 1, y, x) == pytest.approx(
                    expected, abs=1e-12
                )

    def test_low_y_near_zero(self, dataset_factory):
        ds = dataset_factory(30, seed=42)
        fit = fit_conditional_copula(ds, select_degrees(30, "plugin"))
        val = conditional_marginal_cdf(fit, 1, ds.y1.min() - 1.0, float(ds.x.mean()))
        assert 0.0 <= val <= 0.2

    def test_monotone_in_y(self, dataset_factory):
        ds = dataset_factory(50, seed=7)
        fit = fit_conditional_copula(ds, select_degrees(50, "plugin"))
        y_grid = np.linspace(ds.y1.min() - 0.1, ds.y1.max() + 0.1, 101)
        for x in np.quantile(ds.x, [0.1, 0.3, 0.5, 0.7, 0.9]):
            vals = [conditional_marginal_cdf(fit, 1, y, x) for y in y_grid]
            assert (np.diff(vals) >= -1e-12).all()

    def test_bad_response_index(self, small_fit):
        with pytest.raises(ValidationError):
            conditional_marginal_cdf(small_fit, 3, 0.5, 0.5)


class TestCovariateAdjust:
    def test_values_strictly_inside_unit_interval(self, dataset_factory):
        ds = dataset_factory(40, seed=1)
        adjusted = covariate_adjust(ds, select_degrees(40, "plugin"))
        assert adjusted.values.shape == (40, 3)
        assert (adjusted.values > 0).all() and (adjusted.values < 1).all()

    def test_constant_column_rejected(self):
        ds = Dataset(y1=np.ones(10) * 2, y2=np.arange(10.0), x=np.arange(10.0))
        with pytest.raises(ValidationError, match="constant"):
            covariate_adjust(ds, DegreeConfig(3, 3, 4))

    def test_adjustment_restores_uniform_margins(self):
        # the adjusted responses should look uniform: Kolmogorov distance
        # below 1.5 * 1.36/sqrt(n) in at least 90% of replicates
        n = 200
        threshold = 1.5 * 1.36 / np.sqrt(n)
        degrees = select_degrees(n, "plugin")
        ok = 0
        reps = 100
        for seed in range(reps):
            ds = clayton_dataset(n, seed=seed)
            adjusted = covariate_adjust(ds, degrees)
            good = True
            for j in (0, 1):
                u = np.sort(adjusted.values[:, j])
                steps = np.arange(1, n + 1) / n
                ks = max(np.abs(steps - u).max(), np.abs(u - steps + 1 / n).max())
                good = good and ks <= threshold
            ok += good
        assert ok >= 0.9 * reps


class TestFitPipeline:
    def test_stage2_shape(self):
        ds = clayton_dataset(4, seed=3)
        fit = fit_conditional_copula(ds, DegreeConfig(2, 3, 4))
        assert fit.stage2.theta.shape == (3, 4, 5)

    def test_deterministic(self):
        ds = clayton_dataset(25, seed=9)
        cfg = select_degrees(25, "plugin", seed=5)
        f1 = fit_conditional_copula(ds, cfg)
        f2 = fit_conditional_copula(ds, cfg)
        np.testing.assert_array_equal(f1.stage2.theta, f2.stage2.theta)
        for a, b in zip(f1.stage1, f2.stage1):
            np.testing.assert_array_equal(a.theta, b.theta)

    def test_too_small(self):
        ds = clayton_dataset(3, seed=4)
        with pytest.raises(ValidationError):
            fit_conditional_copula(ds, DegreeConfig(2, 2, 2))

    def test_prior_sample_builds_ensemble(self):
        ds = clayton_dataset(30, seed=11)
        cfg = select_degrees(30, policy="prior-sample", seed=8, draws=3)
        fit = fit_conditional_copula(ds, cfg)
        assert isinstance(fit, ConditionalCopulaEnsemble)
        assert len(fit.members) == 3
        shapes = {m.stage2.theta.shape for m in fit.members}
        expected = {(l1 + 1, l2 + 1, m + 1) for l1, l2, m in cfg.draw_list}
        assert shapes == expected

    def test_ensemble_averages_members(self):
        ds = clayton_dataset(30, seed=12)
        cfg = select_degrees(30, policy="prior-sample", seed=8, draws=3)
        ens = fit_conditional_copula(ds, cfg)
        vals = [cond_copula_derivative(m, 0.4, 0.6, 0.5) for m in ens.members]
        assert cond_copula_derivative(ens, 0.4, 0.6, 0.5) == pytest.approx(np.mean(vals))


class TestCondMargin:
    def test_boundaries_exact(self, small_fit):
        for axis in (1, 2):
            for v in (0.1, 0.5, 0.9):
                assert cond_margin(small_fit, axis, 0.0, v) == 0.0
                assert cond_margin(small_fit, axis, 1.0, v) == pytest.approx(1.0, abs=1e-12)

    def test_product_fit_identity(self):
        fit = product_stage_fit()
        for u in (0.2, 0.5, 0.77):
            for v in (0.1, 0.6):
                assert cond_margin(fit, 1, u, v) == pytest.approx(u, abs=1e-13)

    def test_monotone_in_u(self, small_fit):
        u = np.linspace(0, 1, 200)
        for axis in (1, 2):
            vals = [cond_margin(small_fit, axis, ui, 0.37) for ui in u]
            assert (np.diff(vals) >= -1e-12).all()


class TestInvertCondMargin:
    def test_exact_boundary_roots(self, small_fit):
        assert invert_cond_margin(small_fit, 1, 0.0, 0.5) == 0.0
        assert invert_cond_margin(small_fit, 1, 1.0, 0.5) == 1.0

    def test_product_fit_is_identity(self):
        fit = product_stage_fit()
        for p in (0.123, 0.5, 0.987):
            assert invert_cond_margin(fit, 2, p, 0.3) == pytest.approx(p, abs=1e-9)

    def test_roundtrip(self, fit_factory):
        fit = fit_factory(60, seed=21)
        p_grid = np.linspace(0.01, 0.99, 50)
        for axis in (1, 2):
            for v in (0.1, 0.5, 0.9):
                u = invert_cond_margin(fit, axis, p_grid, v)
                back = np.array([cond_margin(fit, axis, ui, v) for ui in u])
                assert np.abs(back - p_grid).max() <= 1e-9

    def test_monotone_in_p(self, small_fit):
        p = np.linspace(0, 1, 101)
        u = invert_cond_margin(small_fit, 1, p, 0.42)
        assert (np.diff(u) >= -1e-12).all()

    def test_bad_tolerance(self, small_fit):
        with pytest.raises(ValidationError):
            invert_cond_margin(small_fit, 1, 0.5, 0.5, tol=0.0)


class TestConditionalCopula:
    def test_uniform_margins(self, fit_factory):
        fit = fit_factory(50, seed=31)
        for v in (0.25, 0.5, 0.75):
            for u in (0.2, 0.5, 0.8):
                assert conditional_copula_cdf(fit, 1.0, u, v) == pytest.approx(u, abs=1e-8)
                assert conditional_copula_cdf(fit, u, 1.0, v) == pytest.approx(u, abs=1e-8)

    def test_grounded(self, small_fit):
        assert conditional_copula_cdf(small_fit, 0.0, 0.7, 0.5) == pytest.approx(0.0, abs=1e-8)
        assert conditional_copula_cdf(small_fit, 0.7, 0.0, 0.5) == pytest.approx(0.0, abs=1e-8)

    def test_grid_matches_pointwise(self, small_fit):
        u = np.array([0.25, 0.5, 0.75])
        grid = conditional_copula_grid(small_fit, u, u, 0.5)
        for i, u1 in enumerate(u):
            for j, u2 in enumerate(u):
                assert grid[i, j] == pytest.approx(
                    conditional_copula_cdf(small_fit, u1, u2, 0.5), abs=1e-9
                )

    def test_genuine_copula_at_fixed_v(self, fit_factory):
        fit = fit_factory(80, seed=32)
        u = np.arange(1, 16) / 16
        for v in (0.25, 0.5, 0.75):
            surf = conditional_copula_grid(fit, u, u, v)
            full = np.zeros((17, 17))
            full[1:-1, 1:-1] = surf
            full[-1, 1:-1] = full[1:-1, -1].T if False else u
            full[1:-1, -1] = u
            full[-1, -1] = 1.0
            masses = np.diff(np.diff(full, axis=0), axis=1)
            assert masses.min() >= -1e-10
            lower = np.maximum(u[:, None] + u[None, :] - 1.0, 0.0)
            upper = np.minimum(u[:, None], u[None, :])
            assert (surf >= lower - 1e-8).all()
            assert (surf <= upper + 1e-8).all()

    def test_average_of_replicates_close_to_truth(self):
        # Clayton-linked data, n=200: the replicate-mean copula surface at
        # four covariate levels stays sup-close to the data-generating
        # Clayton surface
        n, reps = 200, 100
        u = np.arange(1, 16) / 16
        x_values = np.array([0.5, 1.0, 1.5, 2.0])
        thetas = np.exp(0.8 * x_values - 2.0)
        degrees = select_degrees(n, "plugin")
        mean_surf = {x: np.zeros((15, 15)) for x in x_values}
        for seed in range(reps):
            ds = clayton_dataset(n, seed=900 + seed)
            fit = fit_conditional_copula(ds, degrees)
            for x in x_values:
                v = empirical_cdf_at(ds.x, x)
                mean_surf[x] += conditional_copula_grid(fit, u, u, v) / reps
        for x, th in zip(x_values, thetas):
            truth = (u[:, None] ** (-th) + u[None, :] ** (-th) - 1.0) ** (-1.0 / th)
            sup = np.abs(mean_surf[x] - truth).max()
            assert sup <= 0.03, f"x={x}: sup distance {sup:.4f}"

    def test_at_x_maps_through_covariate_cdf(self, fit_factory):
        fit = fit_factory(40, seed=33)
        x = float(np.median(fit.covariate_sample))
        v = empirical_cdf_at(fit.covariate_sample, x)
        assert 0.45 <= v <= 0.55
        direct = conditional_copula_cdf(fit, 0.3, 0.6, float(v))
        assert conditional_copula_at_x(fit, 0.3, 0.6, x) == pytest.approx(direct, abs=1e-12)

    def test_at_x_below_support(self, fit_factory):
        fit = fit_factory(40, seed=34)
        val = conditional_copula_at_x(fit, 0.3, 0.6, float(fit.covariate_sample.min()) - 10.0)
        direct = conditional_copula_cdf(fit, 0.3, 0.6, 0.0)
        assert val == pytest.approx(direct, abs=1e-12)


class TestSerialization:
    def test_roundtrip_single(self, tmp_path, fit_factory):
        fit = fit_factory(30, seed=41)
        path = tmp_path / "fit.json"
        save_fit(fit, path)
        back = load_fit(path)
        np.testing.assert_array_equal(fit.stage2.theta, back.stage2.theta)
        np.testing.assert_array_equal(fit.covariate_sample, back.covariate_sample)
        assert back.degrees == fit.degrees
        assert conditional_copula_cdf(back, 0.4, 0.7, 0.5) == pytest.approx(
            conditional_copula_cdf(fit, 0.4, 0.7, 0.5), abs=1e-15
        )

    def test_roundtrip_ensemble(self, tmp_path):
        ds = clayton_dataset(25, seed=44)
        cfg = select_degrees(25, policy="prior-sample", seed=1, draws=2)
        ens = fit_conditional_copula(ds, cfg)
        path = tmp_path / "ens.json"
        save_fit(ens, path)
        back = load_fit(path)
        assert isinstance(back, ConditionalCopulaEnsemble)
        assert len(back.members) == 2
        for a, b in zip(ens.members, back.members):
            np.testing.assert_array_equal(a.stage2.theta, b.stage2.theta)

    def test_rejects_garbage(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{}", encoding="utf-8")
        with pytest.raises(ValidationError):
            load_fit(path)
