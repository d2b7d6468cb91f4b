"""The stable-Beta scaled process (SB-SP) model.

Given N samples with K_N = k distinct features, the number of new features
in M further samples is NegBin(k + c + 1, gamma_N^(M) / (beta + gamma_0^(N+M)))
and the number of new features seen exactly r times is
NegBin(k + c + 1, rho_N^(M,r) / (beta + gamma_0^(N) + rho_N^(M,r))).
Here NegBin(r, p) has mean r p / (1 - p), see ``distributions``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .distributions import GammaLaw, NegativeBinomial
from .errors import DomainError, SamplerOverflowError
from .featureset import BinaryFeatureMatrix, FeatureCounts
from .rng import make_rng
from .specfun import check_sigma, gamma_curve, gamma_sum, rho

#: Largest number of new features a single sampler step may produce.
MAX_NEW_PER_STEP = 10**7


@dataclass(frozen=True)
class SBSPParams:
    """Hyperparameters (sigma, c, beta) of the SB-SP prior.

    ``c = 0`` is allowed; sigma must lie in the clamped interval
    ``[SIGMA_MIN, SIGMA_MAX]``.
    """

    sigma: float
    c: float
    beta: float

    model = "sbsp"

    def __post_init__(self):
        check_sigma(self.sigma)
        if not (self.c >= 0.0 and math.isfinite(self.c)):
            raise DomainError(f"c must be finite and >= 0, got {self.c}")
        if not (self.beta > 0.0 and math.isfinite(self.beta)):
            raise DomainError(f"beta must be finite and > 0, got {self.beta}")

    def to_dict(self) -> dict:
        return {"model": self.model, "sigma": self.sigma, "c": self.c, "beta": self.beta}


def _check_nk(n: int, k: int, n_min: int = 1) -> tuple[int, int]:
    n, k = int(n), int(k)
    if n < n_min:
        raise DomainError(f"n must be >= {n_min}, got {n}")
    if k < 0:
        raise DomainError(f"k must be >= 0, got {k}")
    return n, k


def _check_horizon(m: int) -> int:
    m = int(m)
    if m < 1:
        raise DomainError(f"horizon must be >= 1, got {m}")
    return m


def _spectrum_arrays(counts: FeatureCounts) -> tuple[np.ndarray, np.ndarray]:
    f = np.asarray(counts.f, dtype=np.float64)
    js = np.flatnonzero(f) + 1
    if js.size and js[-1] > counts.n:
        raise DomainError(f"frequency {js[-1]} exceeds n = {counts.n}")
    if int(f.sum()) != counts.k:
        raise DomainError("frequency spectrum does not sum to k")
    return js.astype(np.float64), f[js - 1]


class SBSPLikelihood:
    """log EFPF of one fixed dataset as a function of (sigma, c, beta).

    Terms that do not depend on the parameters are precomputed once, so an
    evaluation costs O(distinct frequencies) plus one gamma_0^(N) sum.
    """

    def __init__(self, counts: FeatureCounts):
        n, k = _check_nk(counts.n, counts.k)
        self.n, self.k = n, k
        self._js, self._fs = _spectrum_arrays(counts)
        self._const = float(np.dot(self._fs, gammaln(n - self._js + 1.0)))

    def __call__(self, sigma: float, c: float, beta: float) -> float:
        n, k = self.n, self.k
        g0 = gamma_sum(0, n, sigma)
        out = (c + 1.0) * math.log(beta) - (k + c + 1.0) * math.log(beta + g0)
        out += math.lgamma(k + c + 1.0) - math.lgamma(c + 1.0)
        if k:
            out += k * (math.log(sigma) - math.lgamma(n - sigma + 1.0))
            out += float(np.dot(self._fs, gammaln(self._js - sigma))) + self._const
        return out


def efpf_log(params: SBSPParams, counts: FeatureCounts) -> float:
    """Log-probability of a particular feature allocation with the given frequencies.

    Examples
    --------
    >>> from unseenkit.featureset import FeatureCounts
    >>> round(math.exp(efpf_log(SBSPParams(0.5, 0.0, 1.0), FeatureCounts.from_frequencies(1, [1]))), 12)
    0.25
    """
    return SBSPLikelihood(counts)(params.sigma, params.c, params.beta)


def posterior_unseen(params: SBSPParams, n: int, k: int, m_horizon: int) -> NegativeBinomial:
    """Posterior law of the number of new features in ``m_horizon`` further samples."""
    n, k = _check_nk(n, k)
    m = _check_horizon(m_horizon)
    g = gamma_sum(n, m, params.sigma)
    g0 = gamma_sum(0, n, params.sigma)
    # beta + gamma_0^(N+M) written through the telescoping identity
    return NegativeBinomial(k + params.c + 1.0, g / (params.beta + g0 + g))


def posterior_unseen_rare(
    params: SBSPParams, n: int, k: int, m_horizon: int, r: int
) -> NegativeBinomial:
    """Posterior law of the number of new features seen exactly ``r`` times in the horizon."""
    n, k = _check_nk(n, k)
    m = _check_horizon(m_horizon)
    rr = rho(n, m, r, params.sigma)
    g0 = gamma_sum(0, n, params.sigma)
    return NegativeBinomial(k + params.c + 1.0, rr / (params.beta + g0 + rr))


def posterior_mean_unseen(params: SBSPParams, n: int, k: int, m_horizon: int) -> float:
    """(k + c + 1) gamma_N^(M) / (beta + gamma_0^(N)), linear in k."""
    n, k = _check_nk(n, k)
    m = _check_horizon(m_horizon)
    g = gamma_sum(n, m, params.sigma)
    return (k + params.c + 1.0) * g / (params.beta + gamma_sum(0, n, params.sigma))


def posterior_mean_curve(params: SBSPParams, n: int, k: int, m_max: int) -> np.ndarray:
    """Posterior means for every horizon 1..m_max from one pass over the Beta sums."""
    n, k = _check_nk(n, k)
    g = gamma_curve(n, _check_horizon(m_max), params.sigma)
    return (k + params.c + 1.0) * g / (params.beta + gamma_sum(0, n, params.sigma))


def posterior_mean_rare(params: SBSPParams, n: int, k: int, m_horizon: int, r: int) -> float:
    n, k = _check_nk(n, k)
    m = _check_horizon(m_horizon)
    rr = rho(n, m, r, params.sigma)
    return (k + params.c + 1.0) * rr / (params.beta + gamma_sum(0, n, params.sigma))


def latent_jump_posterior(params: SBSPParams, n: int, k: int) -> GammaLaw:
    """Posterior of Delta ** -sigma: Gamma with shape k + c + 1 and rate beta + gamma_0^(N)."""
    n, k = _check_nk(n, k, n_min=0)
    g0 = gamma_sum(0, n, params.sigma) if n else 0.0
    return GammaLaw(k + params.c + 1.0, params.beta + g0)


def asymptotic_limit(params: SBSPParams, n: int, k: int, rare: int | None = None) -> GammaLaw:
    """Limit law of U_N^(M) / M ** sigma (or of the rare count) as M grows.

    For the total count the rate is (beta + gamma_0^(N)) / Gamma(1 - sigma);
    for prevalence ``rare = r`` it is
    Gamma(r + 1) (beta + gamma_0^(N)) / (sigma Gamma(r - sigma)).
    Both follow from the growth gamma_N^(M) ~ Gamma(1 - sigma) M ** sigma.
    """
    n, k = _check_nk(n, k)
    s = params.sigma
    base = params.beta + gamma_sum(0, n, s)
    shape = k + params.c + 1.0
    if rare is None:
        return GammaLaw(shape, base / math.gamma(1.0 - s))
    r = int(rare)
    if r < 1:
        raise DomainError(f"prevalence must be >= 1, got {r}")
    log_rate = math.lgamma(r + 1.0) + math.log(base) - math.log(s) - math.lgamma(r - s)
    return GammaLaw(shape, math.exp(log_rate))


def prior_predictive(params: SBSPParams, n: int) -> NegativeBinomial:
    """Law of K_n under the prior: NegBin(c + 1, gamma_0^(n) / (beta + gamma_0^(n)))."""
    n = int(n)
    if n < 1:
        raise DomainError("n must be >= 1")
    g0 = gamma_sum(0, n, params.sigma)
    return NegativeBinomial(params.c + 1.0, g0 / (params.beta + g0))


def _step_new_probs(params: SBSPParams, n: int) -> np.ndarray:
    # p_t = sigma B(1 - sigma, t) / (beta + gamma_0^(t)) for t = 1..n
    s = params.sigma
    g0 = gamma_curve(0, n, s)
    increments = np.diff(g0, prepend=0.0)
    return increments / (params.beta + g0)


def sample_dataset(
    params: SBSPParams,
    n: int,
    seed: int,
    *,
    latent_jumps: bool = False,
    max_new_per_step: int = MAX_NEW_PER_STEP,
) -> BinaryFeatureMatrix:
    """Draw ``n`` samples sequentially from the SB-SP marginal law.

    Step t adds NegBin(K_{t-1} + c + 1, p_t) new features, with consecutive
    fresh ids, and keeps each earlier feature with probability
    (m_i - sigma) / (t - sigma).  With ``latent_jumps=True`` each earlier
    feature instead draws its jump from Beta(m_i - sigma, t - m_i) and is
    included with that probability; the law is the same.

    Raises
    ------
    SamplerOverflowError
        If a step asks for more than ``max_new_per_step`` new features.
    """
    n = int(n)
    if n < 0:
        raise DomainError("n must be >= 0")
    if n == 0:
        return BinaryFeatureMatrix(())
    rng = make_rng(seed)
    s, c = params.sigma, params.c
    p_new = _step_new_probs(params, n)
    freq = np.zeros(1024, dtype=np.int64)
    k = 0
    samples = []
    for t in range(1, n + 1):
        if k:
            m = freq[:k]
            if latent_jumps:
                probs = rng.beta(m - s, t - m)
            else:
                probs = (m - s) / (t - s)
            old = np.flatnonzero(rng.random(k) < probs)
        else:
            old = np.empty(0, dtype=np.int64)
        # numpy's success probability is our failure probability
        u = rng.negative_binomial(k + c + 1.0, 1.0 - p_new[t - 1])
        if not (0 <= u <= max_new_per_step):
            raise SamplerOverflowError(f"step {t} drew {u} new features")
        if k + u > freq.size:
            freq = np.concatenate([freq, np.zeros(max(freq.size, u), dtype=np.int64)])
        freq[old] += 1
        freq[k : k + u] = 1
        samples.append(frozenset(old.tolist()) | frozenset(range(k, k + u)))
        k += u
    return BinaryFeatureMatrix(tuple(samples))
