"""3BP model, jackknife and Good-Toulmin estimators."""

import math
from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest

from oracles import allocation_mass
from unseenkit.baselines import (
    FreqSpectrum,
    SBBParams,
    good_toulmin,
    good_toulmin_weights,
    jackknife,
    jackknife_richness,
    sbb_efpf_log,
    sbb_posterior_unseen,
    sbb_posterior_unseen_rare,
    sbb_prior_predictive,
    sbb_rate,
)
from unseenkit.errors import DomainError
from unseenkit.featureset import BinaryFeatureMatrix, FeatureCounts

UNIT = SBBParams(1.0, 0.5, 0.5)


def generalized_jackknife(n, spectrum, order):
    """Exact delete-j jackknife combination sum_j (-1)^j (n-j)^k / (j! (k-j)!) K_(j).

    K_(j) is the mean distinct count over all ways of deleting j samples: a
    feature seen x times disappears in C(n - x, j - x) of the C(n, j) deletions.
    """
    k_total = sum(spectrum.values())
    out = Fraction(0)
    for j in range(order + 1):
        lost = sum(Fraction(fx * math.comb(n - x, j - x), math.comb(n, j)) for x, fx in spectrum.items() if x <= j)
        k_j = k_total - lost
        out += Fraction((-1) ** j * (n - j) ** order, math.factorial(j) * math.factorial(order - j)) * k_j
    return out


def gt_reference(n, m, spectrum, smoothing):
    """Good-Toulmin with the binomial / Poisson tails summed in high precision."""
    t = mp.mpf(m) / n
    total = mp.mpf(0)
    for j, fj in spectrum.items():
        w = (-1) ** (j + 1) * t**j
        if smoothing == "binomial" and t > 1:
            kappa = math.ceil(0.5 * math.log2(n * float(t) ** 2 / (float(t) - 1)))
            q = 2 / (2 + t)
            w *= mp.fsum(mp.binomial(kappa, i) * q**i * (1 - q) ** (kappa - i) for i in range(j, kappa + 1))
        elif smoothing == "poisson" and t > 1:
            lam = mp.log(n * (t + 1) ** 2 / (t - 1)) / (2 * t)
            w *= mp.fsum(mp.exp(-lam) * lam**i / mp.factorial(i) for i in range(j, j + 200))
        total += w * fj
    return float(total)


class TestSBBParams:
    def test_domain(self):
        for bad in [(0.0, 0.5, 1.0), (1.0, 0.0, 1.0), (1.0, 1.0, 1.0), (1.0, 0.5, -0.5)]:
            with pytest.raises(DomainError):
                SBBParams(*bad)


class TestSBB:
    def test_worked_values(self):
        assert sbb_efpf_log(UNIT, FeatureCounts.from_frequencies(1, [1])) == pytest.approx(-2.0 + math.log(2.0), rel=1e-12)
        law = sbb_posterior_unseen(UNIT, 1, 1)
        assert law.rate == pytest.approx(4 / 3, rel=1e-12)
        assert sbb_posterior_unseen(UNIT, 5, 0).rate == 0.0

    def test_empty_allocation(self):
        p = SBBParams(2.0, 0.3, 1.2)
        expect = -2.0 * sum(float(mp.beta(0.7, 1.5 + i - 1)) for i in range(1, 5))
        assert sbb_efpf_log(p, FeatureCounts.from_frequencies(4, [])) == pytest.approx(expect, rel=1e-12)

    @pytest.mark.parametrize("params", [UNIT, SBBParams(3.0, 0.2, 2.0), SBBParams(0.7, 0.9, -0.5)])
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_allocations_normalize_to_poisson(self, params, n):
        max_k = {1: 40, 2: 14, 3: 8}[n]
        by_k = allocation_mass(lambda c: sbb_efpf_log(params, c), n, max_k)
        law = sbb_prior_predictive(params, n)
        for k in range(max_k + 1):
            assert by_k[k] == pytest.approx(law.pmf(k), rel=1e-10)

    def test_alternating_form(self):
        rng = np.random.default_rng(2)
        for _ in range(30):
            p = SBBParams(rng.exponential(3.0), rng.uniform(0.05, 0.95), rng.uniform(-0.04, 5.0))
            n, m = int(rng.integers(0, 200)), int(rng.integers(1, 13))
            a, s = mp.mpf(p.alpha), mp.mpf(p.kappa + p.alpha)
            ref = p.theta * mp.fsum((-1) ** (j + 1) * mp.binomial(m, j) * mp.beta(j - a, n + s) for j in range(1, m + 1))
            assert sbb_rate(p, n, m) == pytest.approx(float(ref), rel=1e-10)

    def test_rate_additive(self):
        p = SBBParams(2.0, 0.4, 1.0)
        for n, m1, m2 in [(0, 1, 1), (10, 50, 70), (1000, 3, 9000)]:
            assert sbb_rate(p, n, m1 + m2) == pytest.approx(sbb_rate(p, n, m1) + sbb_rate(p, n + m1, m2), rel=1e-13)

    def test_rare_rates_sum_to_total(self):
        p = SBBParams(2.0, 0.4, 1.0)
        n, m = 7, 30
        total = math.fsum(sbb_posterior_unseen_rare(p, n, m, r).rate for r in range(1, m + 1))
        assert total == pytest.approx(sbb_rate(p, n, m), rel=1e-12)

    def test_rare_domain(self):
        with pytest.raises(DomainError):
            sbb_posterior_unseen_rare(UNIT, 1, 2, 3)


class TestJackknife:
    def test_worked_value(self):
        spec = FreqSpectrum(5, {1: 4, 3: 6})
        assert jackknife_richness(spec, 1) == pytest.approx(13.2)
        assert jackknife(spec, 1) == pytest.approx(3.2)

    def test_no_singletons(self):
        assert jackknife(FreqSpectrum(5, {2: 3}), 1) == 0.0

    def test_monotone_in_singletons(self):
        ests = [jackknife(FreqSpectrum(9, {1: f1, 2: 3}), 1) for f1 in range(20)]
        assert all(b >= a for a, b in zip(ests, ests[1:]))

    @pytest.mark.parametrize("order", [1, 2, 3, 4])
    def test_matches_generalized_jackknife(self, order):
        rng = np.random.default_rng(order)
        for _ in range(25):
            n = int(rng.integers(order + 1, 40))
            spec = {int(j): int(rng.integers(0, 12)) for j in rng.integers(1, n + 1, size=6)}
            spec = {j: f for j, f in spec.items() if f}
            exact = generalized_jackknife(n, spec, order)
            assert jackknife_richness(FreqSpectrum(n, spec), order) == pytest.approx(float(exact), rel=1e-12, abs=1e-12)

    def test_nonnegative_clamp(self):
        # heavy doubletons push the second order below K
        assert jackknife(FreqSpectrum(3, {2: 10}), 2) == 0.0

    def test_from_counts(self):
        data = BinaryFeatureMatrix.from_iterable([[1, 2], [2, 3], [3], [4]])
        assert jackknife(data.counts(), 1) == pytest.approx(2 * 3 / 4)

    def test_domain(self):
        with pytest.raises(DomainError):
            jackknife(FreqSpectrum(3, {1: 1}), 5)
        with pytest.raises(DomainError):
            jackknife(FreqSpectrum(2, {1: 1}), 2)
        with pytest.raises(DomainError):
            FreqSpectrum(2, {3: 1})


class TestGoodToulmin:
    def test_worked_value(self):
        spec = FreqSpectrum(4, {1: 3, 2: 2, 3: 1})
        assert good_toulmin(spec, 4) == pytest.approx(2.0)

    def test_empty(self):
        assert good_toulmin(FreqSpectrum(4, {}), 10, "poisson") == 0.0

    @pytest.mark.parametrize("smoothing", ["binomial", "poisson"])
    def test_short_horizon_unsmoothed(self, smoothing):
        spec = FreqSpectrum(10, {1: 5, 2: 3, 4: 1})
        for m in (1, 5, 10):
            assert good_toulmin(spec, m, smoothing) == good_toulmin(spec, m, "none")

    @pytest.mark.parametrize("smoothing", ["none", "binomial", "poisson"])
    def test_against_reference(self, smoothing):
        spec = {1: 17, 2: 6, 3: 4, 5: 2, 9: 1}
        for n, m in [(20, 5), (20, 20), (20, 60), (50, 1950), (100, 250)]:
            got = good_toulmin(FreqSpectrum(n, spec), m, smoothing)
            assert got == pytest.approx(gt_reference(n, m, spec, smoothing), rel=1e-10, abs=1e-9)

    def test_weights_shape(self):
        w = good_toulmin_weights(10, 40, "poisson", 30)
        assert w.shape == (30,) and np.all(np.isfinite(w))

    def test_smoothing_tames_long_horizons(self):
        # the powers t**j with t = 39 make the unsmoothed sum explode
        spec = FreqSpectrum(50, {1: 30, 2: 10, 3: 5})
        raw = abs(good_toulmin(spec, 1950, "none"))
        for s in ("binomial", "poisson"):
            assert abs(good_toulmin(spec, 1950, s)) < raw / 100

    def test_domain(self):
        with pytest.raises(DomainError):
            good_toulmin(FreqSpectrum(4, {1: 1}), 3, "bogus")
        with pytest.raises(DomainError):
            good_toulmin(FreqSpectrum(4, {1: 1}), 0)
