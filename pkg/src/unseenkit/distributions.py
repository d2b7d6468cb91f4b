"""Posterior laws over counts (negative binomial, Poisson) and the Gamma
limit law.

Probabilities are produced by multiplicative recurrences walked outward
from the mode, which is seeded with a single log-space evaluation; this
avoids the underflow of ``(1 - p) ** r`` for large ``r``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import stats

from ._backend import NEGBIN, POISSON, kernels
from .errors import ApproximationWarning, DomainError, TruncationBudgetExceeded
from .specfun import log_beta

#: Maximum number of pmf terms visited by an exact cdf scan.
CDF_TERM_BUDGET = 10**8
#: Terms smaller than this on either side of the mode are dropped.
TAIL_CUTOFF = 1e-30


def _check_prob(q: float, name: str = "q") -> float:
    q = float(q)
    if not 0.0 < q < 1.0:
        raise DomainError(f"{name} must lie in (0, 1), got {q}")
    return q


class DiscretePosterior:
    """Common query surface for count laws.

    Subclasses provide ``family``, ``mean``, ``variance``, ``_family_code``,
    ``_params``, ``_mode`` and ``logpmf_direct``.
    """

    family: str
    budget: int = CDF_TERM_BUDGET

    # -- recurrence-backed queries -------------------------------------
    def pmf(self, k: int) -> float:
        k = int(k)
        if k < 0:
            return 0.0
        return float(self.pmf_range(k, k)[0])

    def pmf_range(self, lo: int, hi: int) -> np.ndarray:
        """pmf(k) for k = lo..hi (inclusive)."""
        lo = max(int(lo), 0)
        a, b = self._params
        mode = self._mode
        return kernels.pmf_range(
            self._family_code, a, b, mode, self.logpmf_direct(mode), lo, int(hi)
        )

    def _scan(self, qs, kstop=-1):
        a, b = self._params
        mode = self._mode
        return kernels.scan(
            self._family_code,
            a,
            b,
            mode,
            self.logpmf_direct(mode),
            TAIL_CUTOFF,
            int(self.budget),
            np.ascontiguousarray(qs, dtype=np.float64),
            int(kstop),
        )

    def cdf(self, k: int) -> float:
        k = int(k)
        if k < 0:
            return 0.0
        _, cdf_k, _, _, total, complete = self._scan(np.empty(0), k)
        if not complete:
            raise TruncationBudgetExceeded(
                f"cdf({k}) needs more than {self.budget} terms", partial_mass=total
            )
        return min(cdf_k, 1.0)

    def quantiles(self, qs, allow_approximate: bool = True) -> np.ndarray:
        """Smallest k with cdf(k) >= q, for each q (any order)."""
        qs = np.asarray([_check_prob(q) for q in np.atleast_1d(qs)], dtype=np.float64)
        order = np.argsort(qs, kind="stable")
        ks, _, _, _, total, complete = self._scan(qs[order])
        if not complete:
            if not allow_approximate:
                raise TruncationBudgetExceeded(
                    f"quantile scan needs more than {self.budget} terms",
                    partial_mass=total,
                )
            warnings.warn(
                "cdf term budget exceeded; quantiles taken from the Gamma limit",
                ApproximationWarning,
                stacklevel=2,
            )
            ks = self._approximate_quantiles(qs[order])
        out = np.empty_like(ks)
        out[order] = ks
        return out

    def quantile(self, q: float, allow_approximate: bool = True) -> int:
        return int(self.quantiles([q], allow_approximate=allow_approximate)[0])

    def central_interval(self, alpha: float) -> tuple[int, int]:
        """(quantile((1 - alpha)/2), quantile((1 + alpha)/2))."""
        alpha = _check_prob(alpha, "alpha")
        lo, hi = self.quantiles([(1.0 - alpha) / 2.0, (1.0 + alpha) / 2.0])
        return int(lo), int(hi)

    def _approximate_quantiles(self, qs):
        raise NotImplementedError


@dataclass(frozen=True)
class NegativeBinomial(DiscretePosterior):
    """NegBin(r, p): pmf Gamma(k + r) / (Gamma(r) k!) (1 - p)^r p^k.

    ``r`` may be any positive real; ``p`` in [0, 1) is the success
    probability attached to each counted event, so the mean is r p / (1 - p).
    """

    r: float
    p: float

    family = "negative_binomial"
    _family_code = NEGBIN

    def __post_init__(self):
        if not (self.r > 0.0 and math.isfinite(self.r)):
            raise DomainError(f"negative binomial needs r > 0, got {self.r}")
        if not 0.0 <= self.p < 1.0:
            raise DomainError(f"negative binomial needs 0 <= p < 1, got {self.p}")

    @property
    def _params(self):
        return float(self.r), float(self.p)

    @cached_property
    def _mode(self) -> int:
        if self.r <= 1.0 or self.p == 0.0:
            return 0
        return int(math.floor((self.r - 1.0) * self.p / (1.0 - self.p)))

    @property
    def mean(self) -> float:
        return self.r * self.p / (1.0 - self.p)

    @property
    def variance(self) -> float:
        return self.r * self.p / (1.0 - self.p) ** 2

    def logpmf_direct(self, k: int) -> float:
        """Closed-form log pmf (no recurrence)."""
        k = int(k)
        if k < 0:
            return -math.inf
        if self.p == 0.0:
            return 0.0 if k == 0 else -math.inf
        # Gamma(k + r) / (Gamma(r) k!) = 1 / ((k + r) B(r, k + 1))
        log_coef = -math.log(k + self.r) - log_beta(self.r, k + 1.0)
        return log_coef + self.r * math.log1p(-self.p) + k * math.log(self.p)

    def _approximate_quantiles(self, qs):
        # Gamma limit, moment-matched: shape r p, scale 1 / (1 - p)
        shape = self.r * self.p
        return np.floor(stats.gamma.ppf(qs, shape, scale=1.0 / (1.0 - self.p))).astype(np.int64)

    def to_dict(self) -> dict:
        return {"family": self.family, "r": self.r, "p": self.p, "mean": self.mean}


@dataclass(frozen=True)
class Poisson(DiscretePosterior):
    """Poisson(rate); ``rate = 0`` is the point mass at zero."""

    rate: float

    family = "poisson"
    _family_code = POISSON

    def __post_init__(self):
        if not (self.rate >= 0.0 and math.isfinite(self.rate)):
            raise DomainError(f"Poisson needs a finite rate >= 0, got {self.rate}")

    @property
    def _params(self):
        return float(self.rate), 0.0

    @cached_property
    def _mode(self) -> int:
        return int(math.floor(self.rate))

    @property
    def mean(self) -> float:
        return float(self.rate)

    @property
    def variance(self) -> float:
        return float(self.rate)

    def logpmf_direct(self, k: int) -> float:
        k = int(k)
        if k < 0:
            return -math.inf
        if self.rate == 0.0:
            return 0.0 if k == 0 else -math.inf
        return k * math.log(self.rate) - self.rate - math.lgamma(k + 1.0)

    def pmf_range(self, lo: int, hi: int) -> np.ndarray:
        if self.rate == 0.0:
            lo = max(int(lo), 0)
            out = np.zeros(max(int(hi) - lo + 1, 0))
            if lo == 0 and out.size:
                out[0] = 1.0
            return out
        return super().pmf_range(lo, hi)

    def _scan(self, qs, kstop=-1):
        if self.rate == 0.0:
            qs = np.asarray(qs)
            return np.zeros(qs.size, dtype=np.int64), 1.0 if kstop >= 0 else 0.0, 0, 0, 1.0, True
        return super()._scan(qs, kstop)

    def _approximate_quantiles(self, qs):
        return np.floor(stats.gamma.ppf(qs, self.rate)).astype(np.int64)

    def to_dict(self) -> dict:
        return {"family": self.family, "rate": self.rate, "mean": self.mean}


@dataclass(frozen=True)
class GammaLaw:
    """Gamma distribution with the given shape and rate (mean shape / rate)."""

    shape: float
    rate: float

    def __post_init__(self):
        if not (self.shape > 0.0 and self.rate > 0.0):
            raise DomainError(f"GammaLaw needs positive shape and rate, got {self}")

    @property
    def mean(self) -> float:
        return self.shape / self.rate

    @property
    def variance(self) -> float:
        return self.shape / self.rate**2

    def quantile(self, q: float) -> float:
        return float(stats.gamma.ppf(_check_prob(q), self.shape, scale=1.0 / self.rate))

    def central_interval(self, alpha: float) -> tuple[float, float]:
        alpha = _check_prob(alpha, "alpha")
        return self.quantile((1.0 - alpha) / 2.0), self.quantile((1.0 + alpha) / 2.0)
