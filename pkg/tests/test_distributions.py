"""Count laws: pmf recurrences, cdf scans, quantiles and intervals."""

import math

import numpy as np
import pytest
from scipy import stats

from unseenkit.distributions import GammaLaw, NegativeBinomial, Poisson
from unseenkit.errors import ApproximationWarning, DomainError, TruncationBudgetExceeded


class TinyBudgetNegBin(NegativeBinomial):
    budget = 50


class TestNegativeBinomial:
    def test_worked_values(self):
        geo = NegativeBinomial(1.0, 0.5)
        assert geo.pmf(0) == pytest.approx(0.5, rel=1e-15)
        assert geo.quantile(0.5) == 0
        assert NegativeBinomial(2.0, 0.375).mean == pytest.approx(1.2, rel=1e-15)

    @pytest.mark.parametrize("r,p", [(0.3, 0.2), (2.5, 0.9), (123.4, 0.5), (1e6, 1e-4), (1.0, 0.999)])
    def test_recurrence_matches_direct(self, r, p):
        law = NegativeBinomial(r, p)
        ks = np.arange(0, 10_001)
        rec = law.pmf_range(0, 10_000)
        direct = np.array([math.exp(law.logpmf_direct(k)) for k in ks])
        big = direct > 1e-280
        np.testing.assert_allclose(rec[big], direct[big], rtol=1e-10)

    @pytest.mark.parametrize("r,p", [(0.7, 0.3), (5.0, 0.6), (2000.5, 0.01)])
    def test_against_scipy(self, r, p):
        law = NegativeBinomial(r, p)
        ref = stats.nbinom(r, 1.0 - p)
        ks = np.arange(0, 60)
        np.testing.assert_allclose(law.pmf_range(0, 59), ref.pmf(ks), rtol=1e-10, atol=1e-300)
        for k in (0, 3, 17, 59):
            assert law.cdf(k) == pytest.approx(ref.cdf(k), rel=1e-10)
        assert law.mean == pytest.approx(ref.mean(), rel=1e-14)
        assert law.variance == pytest.approx(ref.var(), rel=1e-14)
        for q in (0.01, 0.25, 0.5, 0.9, 0.999):
            assert law.quantile(q) == int(ref.ppf(q))

    def test_quantile_tie_rule(self):
        law = NegativeBinomial(1.0, 0.5)
        # cdf(1) = 0.75 exactly
        assert law.quantile(0.75) == 1
        assert law.quantile(0.75 + 1e-12) == 2

    def test_quantiles_monotone_and_intervals_nested(self):
        law = NegativeBinomial(12.3, 0.85)
        qs = np.linspace(0.001, 0.999, 200)
        ks = law.quantiles(qs)
        assert np.all(np.diff(ks) >= 0)
        shuffled = np.random.default_rng(0).permutation(qs)
        np.testing.assert_array_equal(law.quantiles(shuffled), law.quantiles(qs)[np.searchsorted(qs, shuffled)])
        prev = (math.inf, -math.inf)
        for alpha in (0.1, 0.5, 0.8, 0.95, 0.999):
            lo, hi = law.central_interval(alpha)
            assert lo <= prev[0] and hi >= prev[1]
            prev = (lo, hi)

    def test_p_zero_is_point_mass(self):
        law = NegativeBinomial(3.0, 0.0)
        assert law.pmf(0) == 1.0 and law.pmf(1) == 0.0
        assert law.central_interval(0.9) == (0, 0)

    @pytest.mark.parametrize("r,p", [(0.0, 0.5), (-1.0, 0.5), (1.0, 1.0), (1.0, -0.1), (math.inf, 0.5)])
    def test_domain(self, r, p):
        with pytest.raises(DomainError):
            NegativeBinomial(r, p)

    def test_bad_level(self):
        for q in (0.0, 1.0, 1.5):
            with pytest.raises(DomainError):
                NegativeBinomial(1.0, 0.5).quantile(q)

    def test_budget_exceeded_carries_partial_mass(self):
        # the budget runs out on the way down from the mode: nothing accumulated yet
        law = TinyBudgetNegBin(1e4, 0.9)
        with pytest.raises(TruncationBudgetExceeded) as info:
            law.cdf(1000)
        assert info.value.partial_mass == 0.0
        # a long upper tail from mode 0: the first 51 geometric terms are accumulated
        tail = TinyBudgetNegBin(1.0, 0.999)
        with pytest.raises(TruncationBudgetExceeded) as info:
            tail.cdf(10)
        assert info.value.partial_mass == pytest.approx(1.0 - 0.999**51, rel=1e-12)
        with pytest.raises(TruncationBudgetExceeded):
            law.quantile(0.5, allow_approximate=False)

    def test_budget_fallback_is_flagged_and_close(self):
        law = TinyBudgetNegBin(1e4, 0.9)
        with pytest.warns(ApproximationWarning):
            approx = law.quantile(0.5)
        exact = NegativeBinomial(1e4, 0.9).quantile(0.5)
        assert abs(approx - exact) / exact < 0.01

    def test_huge_shape_no_underflow(self):
        # (1 - p)^r underflows for r ~ 1e9; the mode-seeded recurrence must not
        law = NegativeBinomial(1.3e9, 3.6e-8)
        mean = law.mean
        lo, hi = law.central_interval(0.9)
        assert lo < mean < hi
        sd = math.sqrt(law.variance)
        assert hi - lo == pytest.approx(2 * 1.6449 * sd, rel=0.1)


class TestPoisson:
    def test_against_scipy(self):
        law = Poisson(7.25)
        ks = np.arange(0, 50)
        np.testing.assert_allclose(law.pmf_range(0, 49), stats.poisson.pmf(ks, 7.25), rtol=1e-10, atol=1e-300)
        for q in (0.05, 0.5, 0.95):
            assert law.quantile(q) == int(stats.poisson.ppf(q, 7.25))

    def test_zero_rate(self):
        law = Poisson(0.0)
        assert law.pmf(0) == 1.0
        assert law.cdf(0) == 1.0
        assert law.central_interval(0.95) == (0, 0)

    def test_large_rate(self):
        law = Poisson(1e7)
        assert law.quantile(0.5) == int(stats.poisson.ppf(0.5, 1e7))

    def test_domain(self):
        with pytest.raises(DomainError):
            Poisson(-1.0)


class TestGammaLaw:
    def test_moments_and_quantiles(self):
        g = GammaLaw(3.0, 2.0)
        assert g.mean == 1.5 and g.variance == 0.75
        assert g.quantile(0.5) == pytest.approx(stats.gamma.ppf(0.5, 3.0, scale=0.5))
        lo, hi = g.central_interval(0.9)
        assert lo < g.quantile(0.5) < hi

    def test_domain(self):
        with pytest.raises(DomainError):
            GammaLaw(0.0, 1.0)
