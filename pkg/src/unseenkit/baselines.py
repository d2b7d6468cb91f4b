"""Competitor estimators: the stable-Beta-Bernoulli (3BP) model, jackknife
richness estimators of orders 1 to 4, and (smoothed) Good-Toulmin.

Under 3BP the unseen count is Poisson with a rate that depends on the data
only through N; the jackknife estimates total richness, so its prediction
of new features does not grow with the horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy import stats
from scipy.special import betaln

from .distributions import Poisson
from .errors import DomainError
from .featureset import FeatureCounts
from .specfun import beta_sum, log_beta, log_binom


@dataclass(frozen=True)
class SBBParams:
    """Mass theta > 0, stable index 0 < alpha < 1, concentration kappa > -alpha."""

    theta: float
    alpha: float
    kappa: float

    model = "sbb"

    def __post_init__(self):
        if not (self.theta > 0.0 and math.isfinite(self.theta)):
            raise DomainError(f"theta must be finite and > 0, got {self.theta}")
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not (self.kappa + self.alpha > 0.0 and math.isfinite(self.kappa)):
            raise DomainError(f"kappa must exceed -alpha, got {self.kappa}")

    def to_dict(self) -> dict:
        return {"model": self.model, "theta": self.theta, "alpha": self.alpha, "kappa": self.kappa}


class SBBLikelihood:
    """log EFPF of a fixed dataset under 3BP as a function of (theta, alpha, kappa)."""

    def __init__(self, counts: FeatureCounts):
        if counts.n < 1 or counts.k < 0:
            raise DomainError("counts need n >= 1 and k >= 0")
        f = np.asarray(counts.f, dtype=np.float64)
        js = np.flatnonzero(f) + 1
        if js.size and js[-1] > counts.n:
            raise DomainError(f"frequency {js[-1]} exceeds n = {counts.n}")
        self.n, self.k = counts.n, counts.k
        self._js = js.astype(np.float64)
        self._fs = f[js - 1]

    def __call__(self, theta: float, alpha: float, kappa: float) -> float:
        n = self.n
        out = -theta * beta_sum(1.0 - alpha, kappa + alpha, n)
        if self.k:
            out += self.k * math.log(theta)
            out += float(np.dot(self._fs, betaln(self._js - alpha, n - self._js + kappa + alpha)))
        return out


def sbb_efpf_log(params: SBBParams, counts: FeatureCounts) -> float:
    """-theta sum_{n=1..N} B(1 - a, k + a + n - 1) + sum_i [log theta + log B(m_i - a, N - m_i + k + a)]."""
    return SBBLikelihood(counts)(params.theta, params.alpha, params.kappa)


def sbb_rate(params: SBBParams, n: int, m_horizon: int) -> float:
    """theta sum_{i=1..M} B(1 - alpha, kappa + alpha + N + i - 1)."""
    n, m = int(n), int(m_horizon)
    if n < 0 or m < 0:
        raise DomainError("n and horizon must be >= 0")
    if m == 0:
        return 0.0
    a = params.alpha
    return params.theta * beta_sum(1.0 - a, params.kappa + a + n, m)


def sbb_posterior_unseen(params: SBBParams, n: int, m_horizon: int) -> Poisson:
    """Poisson law of new features in ``m_horizon`` samples; independent of K_N."""
    return Poisson(sbb_rate(params, n, m_horizon))


def sbb_posterior_unseen_rare(params: SBBParams, n: int, m_horizon: int, r: int) -> Poisson:
    """New features seen exactly ``r`` times: rate theta C(M, r) B(r - a, M - r + N + k + a)."""
    n, m, r = int(n), int(m_horizon), int(r)
    if n < 0:
        raise DomainError("n must be >= 0")
    if not 1 <= r <= m:
        raise DomainError(f"prevalence needs 1 <= r <= M, got r={r}, M={m}")
    a = params.alpha
    log_rate = log_binom(m, r) + log_beta(r - a, m - r + n + params.kappa + a)
    return Poisson(params.theta * math.exp(log_rate))


def sbb_prior_predictive(params: SBBParams, n: int) -> Poisson:
    """Law of K_n under 3BP."""
    return sbb_posterior_unseen(params, 0, n)


@dataclass(frozen=True)
class FreqSpectrum:
    """Frequency-of-frequencies ``{j: f_j}`` of a sample of size ``n``."""

    n: int
    f: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        for j, fj in self.f.items():
            if not 1 <= j <= self.n or fj < 0:
                raise DomainError(f"invalid spectrum entry f_{j} = {fj} for n = {self.n}")

    @classmethod
    def from_counts(cls, counts: FeatureCounts) -> "FreqSpectrum":
        return cls(counts.n, counts.spectrum())

    @property
    def k(self) -> int:
        return int(sum(self.f.values()))

    def __getitem__(self, j: int) -> int:
        return int(self.f.get(j, 0))


def _as_spectrum(data) -> FreqSpectrum:
    if isinstance(data, FreqSpectrum):
        return data
    if isinstance(data, FeatureCounts):
        return FreqSpectrum.from_counts(data)
    raise TypeError(f"expected FreqSpectrum or FeatureCounts, got {type(data).__name__}")


def jackknife_richness(data, order: int) -> float:
    """Burnham-Overton jackknife estimate of total richness.

    These are the generalized jackknife combinations
    ``sum_{j=0..k} (-1)**j (n - j)**k / (j! (k - j)!) * K_(j)`` with
    ``K_(j)`` the mean distinct count after deleting ``j`` samples,
    written in terms of f_1..f_k.
    """
    spec = _as_spectrum(data)
    order = int(order)
    if order not in (1, 2, 3, 4):
        raise DomainError(f"jackknife order must be 1..4, got {order}")
    n = spec.n
    if n <= order:
        raise DomainError(f"jackknife order {order} needs n > {order}, got n={n}")
    f1, f2, f3, f4 = (spec[j] for j in (1, 2, 3, 4))
    k = spec.k
    if order == 1:
        return k + f1 * (n - 1) / n
    if order == 2:
        return k + f1 * (2 * n - 3) / n - f2 * (n - 2) ** 2 / (n * (n - 1))
    if order == 3:
        return (
            k
            + f1 * (3 * n - 6) / n
            - f2 * (3 * n**2 - 15 * n + 19) / (n * (n - 1))
            + f3 * (n - 3) ** 3 / (n * (n - 1) * (n - 2))
        )
    return (
        k
        + f1 * (4 * n - 10) / n
        - f2 * (6 * n**2 - 36 * n + 55) / (n * (n - 1))
        + f3 * (4 * n**3 - 42 * n**2 + 148 * n - 175) / (n * (n - 1) * (n - 2))
        - f4 * (n - 4) ** 4 / (n * (n - 1) * (n - 2) * (n - 3))
    )


def jackknife(data, order: int) -> float:
    """Predicted number of new features, max(S_order - K, 0); constant in the horizon."""
    spec = _as_spectrum(data)
    return max(jackknife_richness(spec, order) - spec.k, 0.0)


GT_SMOOTHINGS = ("none", "binomial", "poisson")


def good_toulmin_weights(n: int, m_horizon: int, smoothing: str, j_max: int) -> np.ndarray:
    """Coefficients w_j with U = sum_j w_j f_j, for j = 1..j_max."""
    if smoothing not in GT_SMOOTHINGS:
        raise DomainError(f"smoothing must be one of {GT_SMOOTHINGS}, got {smoothing!r}")
    n, m = int(n), int(m_horizon)
    if n < 1 or m < 1:
        raise DomainError("good_toulmin needs n >= 1 and a horizon >= 1")
    t = m / n
    js = np.arange(1, j_max + 1)
    signs = np.where(js % 2 == 1, 1.0, -1.0)
    # t ** j can overflow for large t; the tail weights then vanish anyway
    with np.errstate(over="ignore"):
        w = signs * np.power(t, js.astype(np.float64))
    if smoothing == "none" or t <= 1.0:
        return w
    if smoothing == "binomial":
        trials = math.ceil(0.5 * math.log2(n * t * t / (t - 1.0)))
        tail = stats.binom.sf(js - 1, trials, 2.0 / (2.0 + t))
    else:
        lam = math.log(n * (t + 1.0) ** 2 / (t - 1.0)) / (2.0 * t)
        tail = stats.poisson.sf(js - 1, lam)
    out = np.zeros_like(w)
    keep = tail > 0.0
    out[keep] = w[keep] * tail[keep]
    return out


def good_toulmin(data, m_horizon: int, smoothing: str = "none") -> float:
    """Good-Toulmin estimate sum_j (-1)**(j+1) t**j P(L >= j) f_j with t = M / n.

    ``smoothing='binomial'`` takes L ~ Binomial(ceil(log2(n t^2 / (t - 1)) / 2), 2 / (2 + t));
    ``smoothing='poisson'`` takes L ~ Poisson(log(n (t + 1)^2 / (t - 1)) / (2 t)).
    For t <= 1 the unsmoothed sum is returned whatever ``smoothing`` says.
    """
    spec = _as_spectrum(data)
    if not spec.f:
        good_toulmin_weights(spec.n, m_horizon, smoothing, 1)
        return 0.0
    j_max = max(spec.f)
    w = good_toulmin_weights(spec.n, m_horizon, smoothing, j_max)
    f = np.array([spec[j] for j in range(1, j_max + 1)], dtype=np.float64)
    nz = f > 0
    return float(np.sum(w[nz] * f[nz]))
