import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from logkde.errors import ConfigError, DegenerateSampleError, DomainError
from logkde.estimator import (
    EvaluationGrid,
    FftConfig,
    Sample,
    linear_bin,
    log_kde,
    log_kde_direct,
    log_kde_fft,
    naive_kde_direct,
)
from logkde.kernels import KERNEL_NAMES

PHI0 = 1 / math.sqrt(2 * math.pi)


def sup_rel_error(a, b):
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


class TestSample:
    def test_rejects_nonpositive(self):
        with pytest.raises(DomainError, match="index 1"):
            Sample([1.0, 0.0, 2.0])
        with pytest.raises(DomainError):
            Sample([1.0, np.nan])
        with pytest.raises(DegenerateSampleError):
            Sample([])

    def test_frozen_arrays(self):
        s = Sample([1.0, 2.0])
        with pytest.raises(ValueError):
            s.values[0] = 3.0
        np.testing.assert_allclose(s.log_values, [0.0, math.log(2)])

    def test_grid_validation(self):
        with pytest.raises(DomainError):
            EvaluationGrid([1.0, 1.0])
        with pytest.raises(DomainError):
            EvaluationGrid.span(2.0, 1.0)
        g = EvaluationGrid.span(0.1, 10.0, 5)
        assert g.points[0] == 0.1 and g.points[-1] == 10.0
        np.testing.assert_allclose(np.diff(np.log(g.points)), math.log(10) / 2)


class TestDirect:
    def test_single_point(self):
        est = log_kde_direct([1.0], [1.0], "gaussian", 1.0)
        np.testing.assert_allclose(est.density, [PHI0], rtol=1e-14)
        est = log_kde_direct([0.5], [0.5], "gaussian", 1.0)
        np.testing.assert_allclose(est.density, [PHI0 / 0.5], rtol=1e-14)

    def test_two_points(self):
        est = log_kde_direct([1.0, math.e], [1.0], "gaussian", 1.0)
        np.testing.assert_allclose(est.density, [0.3204565], atol=1e-7)
        np.testing.assert_allclose(est.density, [0.5 * PHI0 * (1 + math.exp(-0.5))], rtol=1e-14)

    def test_naive_uniform(self):
        est = naive_kde_direct([1.0, 3.0], [2.0], "uniform", 1.0)
        np.testing.assert_allclose(est.density, [1 / (2 * math.sqrt(3))], rtol=1e-14)
        assert est.estimator == "naive_kde"

    def test_bad_bandwidth(self):
        for h in (0.0, -1.0, math.inf, None):
            with pytest.raises(DomainError):
                log_kde_direct([1.0, 2.0], None, "gaussian", h)

    @pytest.mark.parametrize("kind", KERNEL_NAMES)
    def test_unit_mass(self, kind, lognormal_sample):
        s = lognormal_sample(60, seed=3)
        h = 0.4
        grid = EvaluationGrid.span(s.values.min() * math.exp(-6 * h),
                                   s.values.max() * math.exp(6 * h), 4096)
        assert abs(log_kde_direct(s, grid, kind, h).integral() - 1) < 0.01

    @pytest.mark.parametrize("kind", KERNEL_NAMES)
    def test_default_grid_mass(self, kind, lognormal_sample):
        s = lognormal_sample(40, seed=11)
        assert abs(log_kde(s, kernel=kind, h=0.3).integral() - 1) < 0.01

    @settings(max_examples=30, deadline=None)
    @given(c=st.floats(1e-3, 1e3), seed=st.integers(0, 1000))
    def test_scale_equivariance(self, c, seed):
        rng = np.random.default_rng(seed)
        x = np.exp(rng.normal(size=25))
        grid = np.exp(np.linspace(-3, 3, 50))
        base = log_kde_direct(x, grid, "gaussian", 0.5).density
        scaled = log_kde_direct(x * c, grid * c, "gaussian", 0.5).density
        np.testing.assert_allclose(scaled * c, base, rtol=1e-12, atol=1e-300)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10_000), kind=st.sampled_from(KERNEL_NAMES))
    def test_nonnegative(self, seed, kind):
        rng = np.random.default_rng(seed)
        est = log_kde_direct(np.exp(rng.normal(size=15)), None, kind, 0.3)
        assert np.all(est.density >= 0)


class TestFft:
    def test_config(self):
        for g in (100, 16, 512.0):
            with pytest.raises(ConfigError):
                FftConfig(g)
        assert FftConfig(1024).grid_size == 1024

    def test_linear_bin_mass(self):
        rng = np.random.default_rng(0)
        data = rng.uniform(0, 10, 500)
        counts = linear_bin(data, 0.0, 10 / 63, 64)
        np.testing.assert_allclose(counts.sum(), 500, rtol=1e-13)
        # first moment is preserved exactly by linear binning
        nodes = np.arange(64) * 10 / 63
        np.testing.assert_allclose(counts @ nodes, data.sum(), rtol=1e-12)

    def test_single_point(self):
        est = log_kde_fft([1.0], FftConfig(1024), "gaussian", 1.0, [1.0])
        np.testing.assert_allclose(est.density, [0.3989], atol=1e-3)

    @pytest.mark.parametrize("kind,tol", [("gaussian", 1e-3), ("logistic", 1e-3),
                                          ("epanechnikov", 5e-3), ("triangular", 5e-3),
                                          ("laplace", 5e-3)])
    def test_matches_direct(self, kind, tol, lognormal_sample):
        s = lognormal_sample(100, seed=5)
        h = 0.3
        grid = EvaluationGrid.default_for(s, h)
        direct = log_kde_direct(s, grid, kind, h).density
        fft = log_kde_fft(s, FftConfig(1024), kind, h, grid).density
        assert sup_rel_error(fft, direct) < tol

    def test_grid_wider_than_default(self, lognormal_sample):
        s = lognormal_sample(50, seed=2)
        grid = EvaluationGrid.span(1e-3, 1e3, 300)
        direct = log_kde_direct(s, grid, "gaussian", 0.4).density
        fft = log_kde_fft(s, FftConfig(4096), "gaussian", 0.4, grid).density
        assert sup_rel_error(fft, direct) < 1e-3

    def test_dispatch(self, lognormal_sample):
        s = lognormal_sample(30)
        assert log_kde(s, h=0.5, method="fft").method == "fft"
        with pytest.raises(ConfigError):
            log_kde(s, h=0.5, method="binned")
