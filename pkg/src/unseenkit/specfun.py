"""Special-function kernels: log-Beta, Beta-function sums, and the
``gamma_sum`` / ``rho`` constants that drive every negative binomial law in
the package.

``gamma_sum(n, m, sigma)`` is

    sigma * sum_{i=1..m} B(1 - sigma, n + i)

and ``rho(n, m, r, sigma)`` is

    C(m, r) * sigma * B(r - sigma, n + m - r + 1).
"""

from __future__ import annotations

import math

import numpy as np

from ._backend import kernels
from .errors import DomainError

SIGMA_MIN = 1e-6
SIGMA_MAX = 1.0 - 1e-6

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

# B_{2k} / (2k (2k - 1)) for k = 1..8, Stirling-series coefficients.
_STIRLING = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
)


def check_sigma(sigma: float) -> float:
    """Validate a stable index against the clamped open interval."""
    sigma = float(sigma)
    if not (SIGMA_MIN <= sigma <= SIGMA_MAX):
        raise DomainError(f"sigma={sigma!r} outside [{SIGMA_MIN}, {SIGMA_MAX}]")
    return sigma


def _lgamma_correction(x: float) -> float:
    # lgamma(x) - ((x - 0.5) log x - x + log sqrt(2 pi)), valid for x >= 10
    inv = 1.0 / x
    inv2 = inv * inv
    acc = 0.0
    for coef in reversed(_STIRLING):
        acc = acc * inv2 + coef
    return acc * inv


def log_beta(a: float, b: float) -> float:
    """Natural log of the Beta function B(a, b).

    Differences of large log-gamma values are formed analytically so the
    relative error stays near machine precision even when one argument is
    in the millions.

    Raises
    ------
    DomainError
        If either argument is not strictly positive.
    """
    a = float(a)
    b = float(b)
    if not (a > 0.0 and b > 0.0) or math.isinf(a) or math.isinf(b):
        raise DomainError(f"log_beta needs positive finite arguments, got ({a}, {b})")
    p, q = (a, b) if a <= b else (b, a)
    s = p + q
    if p >= 10.0:
        corr = _lgamma_correction(p) + _lgamma_correction(q) - _lgamma_correction(s)
        return (
            -0.5 * math.log(q)
            + _HALF_LOG_2PI
            + corr
            + (p - 0.5) * math.log(p / s)
            + q * math.log1p(-p / s)
        )
    if q >= 10.0:
        corr = _lgamma_correction(q) - _lgamma_correction(s)
        return math.lgamma(p) + corr + p - p * math.log(s) + (q - 0.5) * math.log1p(-p / s)
    return math.lgamma(p) + math.lgamma(q) - math.lgamma(s)


def beta(a: float, b: float) -> float:
    return math.exp(log_beta(a, b))


def log_binom(n: int, k: int) -> float:
    """log C(n, k) via the Beta function."""
    if not 0 <= k <= n:
        raise DomainError(f"binomial coefficient needs 0 <= k <= n, got n={n}, k={k}")
    if k == 0 or k == n:
        return 0.0
    return -math.log(n + 1.0) - log_beta(k + 1.0, n - k + 1.0)


def beta_sum(a: float, b: float, count: int) -> float:
    """sum_{i=0..count-1} B(a, b + i).

    One log-Beta evaluation seeds the recurrence
    B(a, b + 1) = B(a, b) * b / (a + b); the rest is the compiled loop.
    """
    count = int(count)
    if count < 0:
        raise DomainError("count must be nonnegative")
    if count == 0:
        return 0.0
    return float(kernels.beta_sum(beta(a, b), float(a), float(b), count))


def beta_cumsum(a: float, b: float, count: int) -> np.ndarray:
    """Partial sums of ``beta_sum``: ``out[j] = sum_{i<=j} B(a, b + i)``."""
    count = int(count)
    if count < 0:
        raise DomainError("count must be nonnegative")
    if count == 0:
        return np.empty(0, dtype=np.float64)
    return kernels.beta_cumsum(beta(a, b), float(a), float(b), count)


def gamma_sum(n: int, m: int, sigma: float) -> float:
    """sigma * sum_{i=1..m} B(1 - sigma, n + i).

    ``n`` is the conditioning sample size and ``m`` the horizon; ``m = 0``
    gives the empty sum.  Increasing in ``m``.

    Examples
    --------
    >>> round(gamma_sum(0, 2, 0.5), 12)
    1.666666666667
    """
    sigma = check_sigma(sigma)
    n, m = int(n), int(m)
    if n < 0 or m < 0:
        raise DomainError(f"gamma_sum needs n >= 0 and m >= 0, got n={n}, m={m}")
    return sigma * beta_sum(1.0 - sigma, n + 1.0, m)


def gamma_curve(n: int, m_max: int, sigma: float) -> np.ndarray:
    """``gamma_sum(n, m, sigma)`` for every ``m = 1..m_max`` in one pass."""
    sigma = check_sigma(sigma)
    if n < 0 or m_max < 0:
        raise DomainError("gamma_curve needs n >= 0 and m_max >= 0")
    return sigma * beta_cumsum(1.0 - sigma, n + 1.0, m_max)


def _log_rho_over_sigma(n: int, m: int, r: int, sigma: float) -> float:
    sigma = check_sigma(sigma)
    n, m, r = int(n), int(m), int(r)
    if n < 0:
        raise DomainError("rho needs n >= 0")
    if not 1 <= r <= m:
        raise DomainError(f"rho needs 1 <= r <= m, got r={r}, m={m}")
    return log_binom(m, r) + log_beta(r - sigma, n + m - r + 1.0)


def log_rho(n: int, m: int, r: int, sigma: float) -> float:
    return math.log(sigma) + _log_rho_over_sigma(n, m, r, sigma)


def rho(n: int, m: int, r: int, sigma: float) -> float:
    """C(m, r) * sigma * B(r - sigma, n + m - r + 1), binomial in log space.

    Evaluated as ``sigma * exp(...)`` so that ``rho(n, 1, 1, s)`` and
    ``gamma_sum(n, 1, s)`` round identically.
    """
    return sigma * math.exp(_log_rho_over_sigma(n, m, r, sigma))


def log_rising(x: float, m: int) -> float:
    """log of the rising factorial (x)_m = Gamma(x + m) / Gamma(x)."""
    if m == 0:
        return 0.0
    # (x)_m = Gamma(m) / B(x, m)
    return math.lgamma(m) - log_beta(x, m)
