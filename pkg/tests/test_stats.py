import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from sorkinsim.errors import DomainError, IllConditionedError
from sorkinsim.stats import FitMethod, Histogram, build_histogram, default_bin_count, fit_normal, summary


class TestHistogram:
    def test_right_closed_bins(self):
        h = build_histogram([0.0, 0.5, 1.0], 2)
        assert np.array_equal(h.bin_edges, [0.0, 0.5, 1.0])
        assert np.array_equal(h.counts, [2, 1])

    def test_all_counted(self):
        x = np.random.default_rng(0).normal(size=1001)
        assert build_histogram(x, 17).total == 1001

    def test_constant_data(self):
        h = build_histogram([3.0] * 4, 4)
        assert h.total == 4 and h.bin_edges[0] < 3.0 < h.bin_edges[-1]

    def test_uniform_counts_binomial(self):
        x = np.random.default_rng(1).uniform(size=20_000)
        h = build_histogram(x, 20)
        expected = 20_000 / 20
        sd = np.sqrt(20_000 * 0.05 * 0.95)
        assert np.all(np.abs(h.counts - expected) < 4.5 * sd)

    def test_default_bins(self):
        x = np.random.default_rng(2).normal(size=5000)
        assert default_bin_count(x) >= 10
        assert build_histogram(x).counts.size == default_bin_count(x)

    def test_centers(self):
        assert np.allclose(Histogram([0, 1, 3], [1, 1]).centers, [0.5, 2.0])

    @pytest.mark.parametrize("bad", [[], [1.0, np.nan]])
    def test_bad_data(self, bad):
        with pytest.raises(DomainError):
            build_histogram(bad, 3)

    def test_bad_edges(self):
        with pytest.raises(DomainError):
            Histogram([0, 0, 1], [1, 1])
        with pytest.raises(DomainError):
            Histogram([0, 1], [1, 2])


class TestFitNormal:
    data = np.random.default_rng(3).normal(3.96e-4, 5.23e-4, size=5000)

    def test_moments(self):
        f = fit_normal(self.data)
        assert f.mu == pytest.approx(self.data.mean())
        assert f.sigma == pytest.approx(self.data.std(ddof=1))
        assert f.method is FitMethod.MOMENTS_ON_DATA and f.n == 5000

    @pytest.mark.parametrize("weights", [False, True])
    def test_histogram_lsq(self, weights):
        f = fit_normal(self.data, "histogram_lsq", poisson_weights=weights)
        se = 5.23e-4 / np.sqrt(5000)
        assert abs(f.mu - 3.96e-4) < 3 * se
        assert f.sigma == pytest.approx(5.23e-4, rel=0.05)

    def test_from_histogram(self):
        h = build_histogram(self.data, 40)
        f = fit_normal(histogram=h, method=FitMethod.LEAST_SQUARES_ON_HISTOGRAM)
        assert f.n == 5000

    def test_constant_data(self):
        for method in FitMethod:
            with pytest.raises(IllConditionedError):
                fit_normal([1.0, 1.0, 1.0], method)

    def test_moments_need_data(self):
        with pytest.raises(DomainError):
            fit_normal(None, "moments")

    def test_sparse_histogram(self):
        with pytest.raises(IllConditionedError):
            fit_normal(histogram=Histogram([0, 1, 2, 3], [5, 0, 5]), method="histogram_lsq")

    def test_agrees_with_scipy(self):
        mu, sigma = sps.norm.fit(self.data)
        f = fit_normal(self.data)
        assert f.mu == pytest.approx(mu)
        assert f.sigma == pytest.approx(sigma * np.sqrt(5000 / 4999))

    @settings(max_examples=20, deadline=None)
    @given(st.floats(-1e3, 1e3), st.floats(1e-3, 1e3))
    def test_equivariance(self, shift, scale):
        base = np.random.default_rng(4).normal(size=2000)
        a = fit_normal(base)
        b = fit_normal(scale * base + shift)
        assert b.mu == pytest.approx(scale * a.mu + shift, rel=1e-9, abs=1e-9 * (abs(shift) + scale))
        assert b.sigma == pytest.approx(scale * a.sigma, rel=1e-9)


class TestSummary:
    def test_values(self):
        s = summary([1.0, 2.0, 3.0, 4.0])
        assert (s.mean, s.n) == (2.5, 4)
        assert s.std == pytest.approx(np.std([1, 2, 3, 4], ddof=1))
        assert s.stderr == pytest.approx(s.std / 2)

    def test_too_small(self):
        with pytest.raises(DomainError):
            summary([1.0])
