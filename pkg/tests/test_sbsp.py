"""SB-SP model: EFPF, posterior laws, asymptotics and the sampler."""

import math

import numpy as np
import pytest
from scipy import stats

from oracles import allocation_mass
from unseenkit.errors import DomainError, SamplerOverflowError
from unseenkit.featureset import FeatureCounts
from unseenkit.rng import derive_seed
from unseenkit.sbsp import (
    SBSPLikelihood,
    SBSPParams,
    _step_new_probs,
    asymptotic_limit,
    efpf_log,
    latent_jump_posterior,
    posterior_mean_curve,
    posterior_mean_rare,
    posterior_mean_unseen,
    posterior_unseen,
    posterior_unseen_rare,
    prior_predictive,
    sample_dataset,
)
from unseenkit.specfun import gamma_sum

HALF = SBSPParams(0.5, 0.0, 1.0)


class TestParams:
    def test_domain(self):
        SBSPParams(0.5, 0.0, 1.0)
        for bad in [(0.0, 1.0, 1.0), (0.5, -1.0, 1.0), (0.5, 1.0, 0.0), (0.5, math.inf, 1.0)]:
            with pytest.raises(DomainError):
                SBSPParams(*bad)


class TestEFPF:
    def test_worked_values(self):
        assert math.exp(efpf_log(HALF, FeatureCounts.from_frequencies(1, []))) == pytest.approx(0.5, rel=1e-12)
        assert math.exp(efpf_log(HALF, FeatureCounts.from_frequencies(1, [1]))) == pytest.approx(0.25, rel=1e-12)
        assert math.exp(efpf_log(HALF, FeatureCounts.from_frequencies(1, [1, 1]))) == pytest.approx(0.25, rel=1e-12)

    @pytest.mark.parametrize("params", [SBSPParams(0.5, 0.0, 1.0), SBSPParams(0.3, 2.0, 4.0), SBSPParams(0.8, 0.5, 9.0)])
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_allocations_normalize_to_prior_predictive(self, params, n):
        # brute-force enumeration of allocations against the analytic law of K_n
        max_k = {1: 40, 2: 14, 3: 7}[n]
        by_k = allocation_mass(lambda c: efpf_log(params, c), n, max_k)
        law = prior_predictive(params, n)
        for k in range(max_k + 1):
            assert by_k[k] == pytest.approx(law.pmf(k), rel=1e-10)

    def test_permutation_invariance(self):
        a = FeatureCounts.from_frequencies(6, [1, 3, 3, 6, 2])
        b = FeatureCounts.from_frequencies(6, [6, 3, 2, 1, 3])
        assert efpf_log(HALF, a) == efpf_log(HALF, b)

    def test_frequency_out_of_range(self):
        bad = FeatureCounts(n=2, k=1, m=(3,), f=(0, 0, 1), curve=())
        with pytest.raises(DomainError):
            SBSPLikelihood(bad)


class TestPosteriorUnseen:
    def test_worked_values(self):
        law = posterior_unseen(HALF, 1, 1, 2)
        assert law.r == pytest.approx(2.0) and law.p == pytest.approx(0.375, rel=1e-12)
        assert law.mean == pytest.approx(1.2, rel=1e-12)
        assert posterior_unseen(HALF, 1, 1, 1).mean == pytest.approx(2 / 3, rel=1e-12)

    def test_vanishes_without_mass(self):
        assert posterior_unseen(SBSPParams(0.5, 1e-12, 1e12), 5, 0, 10).mean < 1e-10

    def test_mean_forms_agree(self):
        rng = np.random.default_rng(0)
        for _ in range(300):
            p = SBSPParams(rng.uniform(0.01, 0.99), rng.exponential(5.0), rng.exponential(3.0) + 1e-3)
            n, m = int(rng.integers(1, 10_001)), int(rng.integers(1, 10_001))
            k = int(rng.integers(0, 5000))
            assert posterior_unseen(p, n, k, m).mean == pytest.approx(posterior_mean_unseen(p, n, k, m), rel=1e-12)

    def test_curve_matches_pointwise(self):
        p = SBSPParams(0.4, 3.0, 2.0)
        curve = posterior_mean_curve(p, 20, 11, 50)
        for m in (1, 7, 50):
            assert curve[m - 1] == pytest.approx(posterior_mean_unseen(p, 20, 11, m), rel=1e-15)

    def test_law_of_total_expectation(self):
        # E K_{N+M} under the prior equals E K_N + E[posterior mean of U]
        p = SBSPParams(0.35, 4.0, 2.5)
        n, m = 17, 40
        ek_n = prior_predictive(p, n).mean
        ek_nm = prior_predictive(p, n + m).mean
        g, g0 = gamma_sum(n, m, p.sigma), gamma_sum(0, n, p.sigma)
        # the posterior mean is linear in k, so it can be averaged in closed form
        assert ek_n + (ek_n + p.c + 1.0) * g / (p.beta + g0) == pytest.approx(ek_nm, rel=1e-12)

    def test_matches_sampler_conditional_law(self):
        # continue the sampler: U = K_{N+M} - K_N given K_N = k follows the posterior law
        p = SBSPParams(0.5, 1.0, 1.0)
        n, m, reps = 3, 3, 6000
        by_k = {}
        for s in range(reps):
            data = sample_dataset(p, n + m, derive_seed(77, s))
            curve = data.distinct_curve()
            by_k.setdefault(int(curve[n - 1]), []).append(int(curve[-1] - curve[n - 1]))
        checked = 0
        for k, us in by_k.items():
            if len(us) < 600:
                continue
            law = posterior_unseen(p, n, k, m)
            top = max(us) + 1
            probs = law.pmf_range(0, top)
            probs[-1] = 1.0 - probs[:-1].sum()
            observed = np.bincount(np.minimum(us, top), minlength=top + 1)
            keep = probs * len(us) >= 5
            obs = np.append(observed[keep], observed[~keep].sum())
            exp = np.append(probs[keep], probs[~keep].sum()) * len(us)
            if exp[-1] == 0:
                obs, exp = obs[:-1], exp[:-1]
            assert stats.chisquare(obs, exp).pvalue > 1e-3
            checked += 1
        assert checked >= 2

    def test_domain(self):
        with pytest.raises(DomainError):
            posterior_unseen(HALF, 0, 0, 1)
        with pytest.raises(DomainError):
            posterior_unseen(HALF, 1, 0, 0)
        with pytest.raises(DomainError):
            posterior_unseen(HALF, 1, -1, 1)


class TestPosteriorRare:
    def test_worked_values(self):
        law = posterior_unseen_rare(HALF, 1, 1, 2, 1)
        assert law.p == pytest.approx(0.347826086956, rel=1e-10)
        assert law.mean == pytest.approx(16 / 15, rel=1e-12)
        assert posterior_mean_rare(HALF, 1, 1, 2, 1) == pytest.approx(16 / 15, rel=1e-12)

    def test_single_step_identical_to_total(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            p = SBSPParams(rng.uniform(1e-6, 1 - 1e-6), rng.exponential(10.0), rng.exponential(10.0) + 1e-9)
            n, k = int(rng.integers(1, 10**5)), int(rng.integers(0, 10**4))
            assert posterior_unseen_rare(p, n, k, 1, 1) == posterior_unseen(p, n, k, 1)

    def test_domain(self):
        with pytest.raises(DomainError):
            posterior_unseen_rare(HALF, 1, 1, 2, 3)


class TestAsymptotics:
    def test_worked_values(self):
        total = asymptotic_limit(HALF, 1, 1)
        assert total.mean == pytest.approx(math.sqrt(math.pi), rel=1e-12)
        assert asymptotic_limit(HALF, 1, 1, rare=1).mean == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-12)
        assert total.shape == 2.0

    def test_exact_mean_approaches_limit(self):
        m = 10**6
        got = posterior_unseen(HALF, 1, 1, m).mean / m**0.5
        assert got == pytest.approx(asymptotic_limit(HALF, 1, 1).mean, rel=0.01)

    def test_finite_horizon_gap(self):
        # gamma_N^(M) / (Gamma(1 - s) M^s) - 1 = (1 + N/M)^s - (N/M)^s - 1 to leading order,
        # which is why small sigma converges slowly
        m = 10**6
        for s, n in [(0.05, 20), (0.2, 5), (0.5, 20), (0.9, 1)]:
            p = SBSPParams(s, 2.0, 1.0)
            ratio = posterior_unseen(p, n, 3, m).mean / m**s / asymptotic_limit(p, n, 3).mean
            x = n / m
            assert ratio - 1.0 == pytest.approx((1 + x) ** s - x**s - 1.0, abs=2e-3)

    @pytest.mark.parametrize("r", [1, 2, 5])
    def test_rare_constant(self, r):
        p = SBSPParams(0.6, 1.5, 2.0)
        m = 10**6
        got = posterior_unseen_rare(p, 4, 6, m, r).mean / m**0.6
        assert got == pytest.approx(asymptotic_limit(p, 4, 6, rare=r).mean, rel=1e-3)

    def test_latent_jump_posterior(self):
        g = latent_jump_posterior(HALF, 1, 1)
        assert (g.shape, g.rate) == (2.0, pytest.approx(2.0))
        prior = latent_jump_posterior(SBSPParams(0.5, 3.0, 2.0), 0, 0)
        assert (prior.shape, prior.rate) == (4.0, 2.0)


class TestSampler:
    def test_empty_and_deterministic(self):
        assert sample_dataset(HALF, 0, 1).n_samples == 0
        p = SBSPParams(0.5, 5.0, 1.0)
        assert sample_dataset(p, 40, 9) == sample_dataset(p, 40, 9)
        assert sample_dataset(p, 40, 9) != sample_dataset(p, 40, 10)

    def test_consecutive_ids(self):
        data = sample_dataset(SBSPParams(0.5, 5.0, 1.0), 60, 3)
        first_seen = []
        seen = set()
        for s in data.samples:
            new = sorted(s - seen)
            first_seen.extend(new)
            seen |= s
        assert first_seen == list(range(len(first_seen)))

    def test_step_probabilities_are_one_step_posteriors(self):
        p = SBSPParams(0.45, 2.0, 1.5)
        probs = _step_new_probs(p, 30)
        for t in (2, 5, 30):
            assert probs[t - 1] == pytest.approx(posterior_unseen(p, t - 1, 0, 1).p, rel=1e-13)
        assert probs[0] == pytest.approx(prior_predictive(p, 1).p, rel=1e-13)

    def test_overflow_guard(self):
        with pytest.raises(SamplerOverflowError):
            sample_dataset(SBSPParams(0.5, 1000.0, 1e-3), 5, 0, max_new_per_step=10)

    def test_prior_predictive_mean(self):
        p = SBSPParams(0.5, 5.0, 1.0)
        ks = [sample_dataset(p, 25, derive_seed(3, s)).counts().k for s in range(1500)]
        law = prior_predictive(p, 25)
        assert np.mean(ks) == pytest.approx(law.mean, abs=4 * math.sqrt(law.variance / 1500))

    def test_latent_jump_path_same_law(self):
        p = SBSPParams(0.5, 3.0, 1.0)
        reps = 1500

        def stats_of(flag, off):
            out = []
            for s in range(reps):
                c = sample_dataset(p, 15, derive_seed(off, s), latent_jumps=flag).counts()
                out.append(sum(c.m))
            return np.array(out)

        a, b = stats_of(False, 1), stats_of(True, 2)
        assert stats.ks_2samp(a, b).pvalue > 1e-3
