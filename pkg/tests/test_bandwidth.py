import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from logkde.bandwidth import (
    AUDIT_POINTS,
    BandwidthSpec,
    SigmaEstimate,
    audit_grid,
    bw_bcv,
    bw_logcv,
    bw_logG,
    bw_nrd,
    bw_nrd0,
    bw_sj,
    bw_ucv,
    cv_bracket,
    cv_criterion,
    estimate_sigma,
    minimize_criterion,
    nrd0,
    select_bandwidth,
    sheather_jones,
)
from logkde.errors import (
    BoundaryMinimumWarning,
    ConfigError,
    DegenerateSampleError,
    FallbackWarning,
    UnsupportedError,
)
from logkde.estimator import Sample
from logkde.theory import lognormal_h_star

CV_SELECTORS = ("ucv", "bcv", "logcv")


class TestRulesOfThumb:
    def test_nrd0_three_points(self, three_points):
        expected = 0.9 * min(1.0, 1.0 / 1.34) * 3 ** -0.2
        np.testing.assert_allclose(bw_nrd0(three_points), expected, rtol=1e-14)
        assert abs(bw_nrd0(three_points) - 0.5392) < 1e-4

    def test_nrd_three_points(self, three_points):
        np.testing.assert_allclose(bw_nrd(three_points), 1.06 / 0.9 * bw_nrd0(three_points), rtol=1e-14)
        assert abs(bw_nrd(three_points) - 0.6351) < 1e-4

    def test_nrd0_large_sample(self):
        rng = np.random.default_rng(42)
        y = rng.normal(size=10_000)
        s = np.std(y, ddof=1)
        q1, q3 = np.quantile(y, [0.25, 0.75])
        expected = 0.9 * min(s, (q3 - q1) / 1.34) * 10_000 ** -0.2
        np.testing.assert_allclose(bw_nrd0(Sample(np.exp(y))), expected, rtol=1e-12)

    def test_zero_iqr_falls_back_to_sd(self):
        y = np.array([0.0, 0.0, 0.0, 0.0, 1.0])
        np.testing.assert_allclose(nrd0(y), 0.9 * np.std(y, ddof=1) * 5 ** -0.2, rtol=1e-14)

    def test_degenerate(self):
        with pytest.raises(DegenerateSampleError):
            bw_nrd0(Sample([2.0]))
        with pytest.raises(DegenerateSampleError):
            bw_nrd0(Sample([2.0, 2.0, 2.0]))


class TestSigma:
    def test_three_points(self, three_points):
        assert estimate_sigma(three_points, "sample_sd").value == pytest.approx(1.0, rel=1e-14)
        np.testing.assert_allclose(estimate_sigma(three_points, "robust_iqr").value, 1 / 1.349, rtol=1e-14)
        np.testing.assert_allclose(estimate_sigma(three_points, "min_of_both").value, 1 / 1.349, rtol=1e-14)

    @pytest.mark.parametrize("method", ["sample_sd", "robust_iqr"])
    def test_consistency(self, method):
        rng = np.random.default_rng(2024)
        s = Sample(np.exp(rng.normal(0.3, 1.5, 100_000)))
        np.testing.assert_allclose(estimate_sigma(s, method).value, 1.5, rtol=0.02)

    def test_unknown_method(self, three_points):
        with pytest.raises(ConfigError):
            estimate_sigma(three_points, "mad")


class TestLogG:
    def test_uses_plugin_formula(self, lognormal_sample):
        s = lognormal_sample(100)
        sd = np.std(s.log_values, ddof=1)
        np.testing.assert_allclose(bw_logG(s), lognormal_h_star(sd, 100), rtol=1e-14)
        np.testing.assert_allclose(bw_logG(s, SigmaEstimate(1.0)), lognormal_h_star(1.0, 100))
        np.testing.assert_allclose(bw_logG(s, 1.0), lognormal_h_star(1.0, 100))

    def test_decreasing_in_n(self):
        hs = [lognormal_h_star(1.0, n) for n in (10, 100, 1000, 10_000)]
        assert all(a > b for a, b in zip(hs, hs[1:]))


class TestCrossValidation:
    @pytest.mark.parametrize("selector", CV_SELECTORS)
    def test_beats_audit_grid(self, selector, lognormal_sample):
        s = lognormal_sample(120, seed=9)
        crit = cv_criterion(s, selector)
        lo, hi = cv_bracket(s)
        res = minimize_criterion(crit, lo, hi)
        values = np.array([crit(h) for h in audit_grid(lo, hi)])
        assert audit_grid(lo, hi).size == AUDIT_POINTS
        assert np.all(res.value <= values + 1e-9)
        assert lo <= res.h <= hi

    @pytest.mark.parametrize("kind", ["epanechnikov", "laplace", "uniform"])
    def test_other_kernels(self, kind, lognormal_sample):
        s = lognormal_sample(80, seed=4)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BoundaryMinimumWarning)
            h = bw_ucv(s, kind)
        crit = cv_criterion(s, "ucv", kind)
        assert all(crit(h) <= crit(g) + 1e-9 for g in audit_grid(*cv_bracket(s)))

    def test_ucv_matches_leave_one_out_definition(self, lognormal_sample):
        # brute force: int f^2 by fine quadrature minus 2/n sum of leave-one-out values
        s = lognormal_sample(30, seed=1)
        y = s.log_values
        h = 0.35
        t = np.linspace(y.min() - 10 * h, y.max() + 10 * h, 20001)
        f = np.exp(-0.5 * ((t[:, None] - y) / h) ** 2).sum(1) / (30 * h * math.sqrt(2 * math.pi))
        k = np.exp(-0.5 * ((y[:, None] - y) / h) ** 2) / (h * math.sqrt(2 * math.pi))
        np.fill_diagonal(k, 0.0)
        loo = k.sum(1) / 29
        expected = np.trapezoid(f * f, t) - 2 * loo.mean()
        np.testing.assert_allclose(cv_criterion(s, "ucv")(h), expected, rtol=1e-8)

    def test_logcv_matches_leave_one_out_definition(self, lognormal_sample):
        s = lognormal_sample(30, seed=1)
        x, y = s.values, s.log_values
        h = 0.35
        t = np.linspace(y.min() - 12 * h, y.max() + 12 * h, 40001)
        fy = np.exp(-0.5 * ((t[:, None] - y) / h) ** 2).sum(1) / (30 * h * math.sqrt(2 * math.pi))
        # int f_log^2 dx = int f_Y(t)^2 exp(-t) dt
        term1 = np.trapezoid(fy * fy * np.exp(-t), t)
        k = np.exp(-0.5 * ((y[:, None] - y) / h) ** 2) / (h * math.sqrt(2 * math.pi) * x[:, None])
        np.fill_diagonal(k, 0.0)
        expected = term1 - 2 * (k.sum(1) / 29).mean()
        np.testing.assert_allclose(cv_criterion(s, "logcv")(h), expected, rtol=1e-6)

    @pytest.mark.parametrize("h", [0.1, 0.3])
    def test_binned_pairs_agree_with_exact(self, h):
        from logkde.bandwidth import _pairs, _ucv
        from logkde.kernels import KernelKind
        rng = np.random.default_rng(8)
        s = Sample(np.exp(rng.normal(size=2000)))
        exact = _ucv(_pairs(s, exact_limit=10**6), KernelKind.GAUSSIAN, h)
        binned = _ucv(_pairs(s, exact_limit=0), KernelKind.GAUSSIAN, h)
        np.testing.assert_allclose(binned, exact, rtol=1e-4)

    @pytest.mark.parametrize("fn", [bw_ucv, bw_bcv])
    def test_envelope(self, fn, lognormal_sample):
        for seed in (1, 2, 3):
            s = lognormal_sample(200, seed=seed)
            ratio = fn(s) / bw_nrd0(s)
            assert 1 / 3 <= ratio <= 3

    def test_logcv_close_to_ucv(self, lognormal_sample):
        s = lognormal_sample(500, seed=12)
        assert 0.5 <= bw_logcv(s) / bw_ucv(s) <= 2

    def test_boundary_warns(self):
        # two tight clusters: ucv wants a tiny h
        s = Sample(np.exp(np.r_[np.full(20, 0.0), np.full(20, 5.0)] + np.arange(40) * 1e-6))
        with pytest.warns(BoundaryMinimumWarning):
            bw_ucv(s)


class TestSheatherJones:
    def test_residual(self, lognormal_sample):
        res = sheather_jones(lognormal_sample(300, seed=6))
        assert not res.fallback
        assert res.residual < 1e-8

    def test_close_to_nrd_for_normal_logs(self, lognormal_sample):
        s = lognormal_sample(10_000, seed=21)
        assert abs(bw_sj(s) / bw_nrd(s) - 1) < 0.10

    def test_unsupported_kernel(self, lognormal_sample):
        with pytest.raises(UnsupportedError):
            select_bandwidth(lognormal_sample(50), "sj", "epanechnikov")

    def test_small_sample(self):
        with pytest.raises(DegenerateSampleError):
            bw_sj(Sample([1.0, 2.0]))

    def test_fallback_flag(self, monkeypatch, lognormal_sample):
        import logkde.bandwidth as bw
        original = bw.sj_equation

        def no_root(sample):
            _, scale, direct = original(sample)
            return (lambda h: 1.0), scale, direct

        monkeypatch.setattr(bw, "sj_equation", no_root)
        with pytest.warns(FallbackWarning):
            res = bw.sheather_jones(lognormal_sample(100))
        assert res.fallback and res.h > 0


class TestScaleInvariance:
    @pytest.mark.parametrize("selector", ["nrd0", "nrd", "logg"])
    @pytest.mark.parametrize("c", [1e-3, 7.5, 1e4])
    def test_closed_forms(self, selector, c, lognormal_sample):
        s = lognormal_sample(150, seed=13)
        a = select_bandwidth(s, selector)
        b = select_bandwidth(s.scaled(c), selector)
        np.testing.assert_allclose(b, a, rtol=1e-12)

    @pytest.mark.parametrize("selector", ["ucv", "bcv", "sj", "logcv"])
    @pytest.mark.parametrize("c", [1e-3, 1e4])
    def test_optimizers(self, selector, c, lognormal_sample):
        s = lognormal_sample(150, seed=13)
        np.testing.assert_allclose(select_bandwidth(s.scaled(c), selector),
                                   select_bandwidth(s, selector), rtol=1e-6)

    @settings(max_examples=20, deadline=None)
    @given(c=st.floats(1e-4, 1e4), seed=st.integers(0, 500))
    def test_nrd0_property(self, c, seed):
        rng = np.random.default_rng(seed)
        s = Sample(np.exp(rng.normal(size=40)))
        np.testing.assert_allclose(bw_nrd0(s.scaled(c)), bw_nrd0(s), rtol=1e-9)


class TestBandwidthSpec:
    def test_parse(self):
        assert BandwidthSpec.parse("fixed:0.25") == BandwidthSpec("fixed", 0.25)
        assert BandwidthSpec.parse(0.25) == BandwidthSpec("fixed", 0.25)
        assert BandwidthSpec.parse("bw.SJ").selector == "sj"
        assert str(BandwidthSpec.parse("LogG")) == "logg"

    @pytest.mark.parametrize("text", ["fixed:-1", "fixed:abc", "silverman", "fixed:0"])
    def test_invalid(self, text):
        with pytest.raises(ConfigError):
            BandwidthSpec.parse(text)

    def test_positive_everywhere(self, lognormal_sample):
        s = lognormal_sample(60, seed=30)
        for sel in ("nrd0", "nrd", "ucv", "bcv", "sj", "logg", "logcv"):
            assert select_bandwidth(s, sel) > 0
