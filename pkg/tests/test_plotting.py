import numpy as np
import pytest

from logkde.errors import DomainError
from logkde.plotting import Overlay, PlotSpec, histogram, nice_ticks, render_svg, sturges_bins


class TestHelpers:
    @pytest.mark.parametrize("n,k", [(1, 1), (2, 2), (100, 8), (331, 10), (1024, 11)])
    def test_sturges(self, n, k):
        assert sturges_bins(n) == k

    def test_histogram_is_a_density(self):
        data = np.random.default_rng(0).gamma(2.0, size=500)
        heights, edges = histogram(data)
        np.testing.assert_allclose(np.sum(heights * np.diff(edges)), 1.0, rtol=1e-12)
        assert heights.size == sturges_bins(500)

    def test_nice_ticks(self):
        assert nice_ticks(0, 1) == pytest.approx([0, 0.2, 0.4, 0.6, 0.8, 1.0])
        assert nice_ticks(0, 23) == [0, 5, 10, 15, 20]
        assert nice_ticks(3, 3) == [3]


class TestRender:
    def spec(self, **kw):
        x = np.linspace(0.1, 5, 50)
        return PlotSpec([Overlay(x, np.exp(-x), "decay")], **kw)

    def test_deterministic(self):
        assert render_svg(self.spec()) == render_svg(self.spec())

    def test_structure(self):
        svg = render_svg(self.spec(title="a < b"))
        assert svg.startswith('<?xml version="1.0"')
        assert svg.rstrip().endswith("</svg>")
        assert "a &lt; b" in svg
        assert svg.count("<polyline") == 1

    def test_limits_clip_points(self):
        svg = render_svg(self.spec(xlim=(1.0, 2.0)))
        pts = svg.split('points="')[1].split('"')[0].split()
        assert len(pts) == np.count_nonzero((np.linspace(0.1, 5, 50) >= 1) & (np.linspace(0.1, 5, 50) <= 2))

    def test_needs_overlay(self):
        with pytest.raises(DomainError):
            PlotSpec([])
