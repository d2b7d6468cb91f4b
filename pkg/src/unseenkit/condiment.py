"""Features carrying one of q characteristics ("condiments").

Every occurrence of a feature in a sample is tagged with a condiment
index 1..q.  The number of new features of condiment l in M further
samples is NegBin under SB-SP and Poisson under 3BP; both depend on the
condiment weights gamma_1..gamma_q through

    psi = sigma * sum_{m=1..M} (-1)^(m+1) C(M, m) (g_l)_m / (|g|)_m B(m - sigma, N + 1)

(and its 3BP analogue).  The alternating sum cancels badly for large M, so
beyond ``ALTERNATING_MAX_M`` it is replaced by the equivalent expectation

    psi = sigma B(1 - sigma, N + 1) E[(1 - (1 - X Y)^M) / Y],
    X ~ Beta(g_l, |g| - g_l),  Y ~ Beta(1 - sigma, N + 1),

evaluated by a tensor product of composite Gauss rules (Gauss-Jacobi at
singular endpoints, Gauss-Legendre on dyadic panels graded towards 0).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .baselines import SBBParams
from .distributions import NegativeBinomial, Poisson
from .errors import DataError, DomainError
from .sbsp import SBSPParams
from .specfun import check_sigma, gamma_sum, log_beta, log_binom

log = logging.getLogger(__name__)

#: Largest horizon evaluated by the alternating sum when ``method='auto'``.
ALTERNATING_MAX_M = 30
#: Gauss nodes per quadrature panel.
PANEL_ORDER = 16


@dataclass(frozen=True)
class CondimentConfig:
    """Positive condiment weights gamma_1..gamma_q."""

    gammas: tuple[float, ...]

    def __post_init__(self):
        g = tuple(float(x) for x in self.gammas)
        if not g:
            raise DomainError("need at least one condiment")
        if not all(x > 0.0 and math.isfinite(x) for x in g):
            raise DomainError(f"condiment weights must be positive, got {g}")
        object.__setattr__(self, "gammas", g)

    @property
    def q(self) -> int:
        return len(self.gammas)

    @property
    def total(self) -> float:
        return math.fsum(self.gammas)

    def weight(self, ell: int) -> float:
        ell = int(ell)
        if not 1 <= ell <= self.q:
            raise DomainError(f"condiment index must lie in 1..{self.q}, got {ell}")
        return self.gammas[ell - 1]


@dataclass(frozen=True)
class CondimentMatrix:
    """Ordered samples mapping feature id to the condiment it carries there."""

    samples: tuple[dict[int, int], ...]
    duplicate_count: int = 0

    @property
    def n_samples(self) -> int:
        return len(self.samples)

    def serialize(self) -> str:
        return "".join(
            " ".join(f"{i}:{s[i]}" for i in sorted(s)) + "\n" for s in self.samples
        )


@dataclass(frozen=True)
class CondimentCounts:
    """Per-feature, per-condiment counts over the first ``n`` samples.

    ``m_matrix[i][j - 1]`` counts occurrences of feature ``ids[i]`` with
    condiment ``j``; row sums are the usual frequencies.
    """

    n: int
    q: int
    ids: tuple[int, ...]
    m_matrix: tuple[tuple[int, ...], ...]

    @property
    def k(self) -> int:
        return len(self.ids)

    @property
    def m(self) -> tuple[int, ...]:
        return tuple(sum(row) for row in self.m_matrix)

    def seen_with(self, ell: int) -> int:
        """Number of distinct features observed at least once with condiment ``ell``."""
        return sum(1 for row in self.m_matrix if row[ell - 1] > 0)


def parse_condiment_sparse(text: str | bytes, q: int | None = None) -> CondimentMatrix:
    """Parse sample lines of ``id:j`` tokens (comment and empty-line rules as for plain data).

    Raises
    ------
    DataError
        On a malformed token, a condiment index outside 1..q, or one feature
        carrying two condiments in the same sample.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    samples = []
    duplicates = 0
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r")
        if line.startswith("#"):
            continue
        sample: dict[int, int] = {}
        for token in line.split():
            fid, sep, cond = token.partition(":")
            if not (sep and fid.isdigit() and cond.isdigit()):
                raise DataError(f"token {token!r} is not of the form id:j", line=lineno)
            fid_i, cond_i = int(fid), int(cond)
            if cond_i < 1 or (q is not None and cond_i > q):
                raise DataError(f"condiment index {cond_i} out of range", line=lineno)
            if fid_i in sample:
                if sample[fid_i] != cond_i:
                    raise DataError(f"feature {fid_i} carries two condiments", line=lineno)
                duplicates += 1
            sample[fid_i] = cond_i
        samples.append(sample)
    if duplicates:
        log.warning("collapsed %d duplicate feature ids", duplicates)
    return CondimentMatrix(tuple(samples), duplicates)


def read_condiment_sparse(path: str | Path, q: int | None = None) -> CondimentMatrix:
    try:
        return parse_condiment_sparse(Path(path).read_bytes(), q)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from exc


def condiment_counts(matrix: CondimentMatrix, q: int, prefix: int | None = None) -> CondimentCounts:
    prefix = matrix.n_samples if prefix is None else int(prefix)
    if not 1 <= prefix <= matrix.n_samples:
        raise DomainError(f"prefix must lie in 1..{matrix.n_samples}, got {prefix}")
    table: dict[int, list[int]] = {}
    for sample in matrix.samples[:prefix]:
        for fid, cond in sample.items():
            if cond > q:
                raise DomainError(f"condiment index {cond} exceeds q = {q}")
            table.setdefault(fid, [0] * q)[cond - 1] += 1
    ids = tuple(sorted(table))
    return CondimentCounts(prefix, q, ids, tuple(tuple(table[i]) for i in ids))


def _rising_ratios(g: float, total: float, m_max: int) -> np.ndarray:
    # (g)_m / (total)_m for m = 1..m_max
    m = np.arange(m_max, dtype=np.float64)
    return np.cumprod((g + m) / (total + m))


def _alternating(m_horizon: int, shift: float, b: float, ratios: np.ndarray | None) -> float:
    # sum_{m=1..M} (-1)^(m+1) C(M, m) R_m B(m - shift, b)
    terms = []
    for m in range(1, m_horizon + 1):
        t = math.exp(log_binom(m_horizon, m) + log_beta(m - shift, b))
        if ratios is not None:
            t *= ratios[m - 1]
        terms.append(t if m % 2 else -t)
    return math.fsum(terms)


@lru_cache(maxsize=128)
def _beta_rule(a: float, b: float, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Composite rule on [0, 1] integrating against the Beta(a, b) law.

    Panels are dyadic, graded towards 0 down to width ``h``.  The two end
    panels use Gauss-Jacobi rules whose weight carries the fractional part
    of the density's power at that end (a weight exponent in (-1, 1), where
    the rule is well conditioned); interior panels use Gauss-Legendre on
    the density itself.
    """
    order = PANEL_ORDER
    log_norm = -log_beta(a, b)
    gl_t, gl_w = roots_legendre(order)

    def split(e):
        # e = whole + frac with frac in (-1, 0] for e < 0, else [0, 1)
        if e < 0.0:
            return 0.0, e
        whole = math.floor(e)
        return whole, e - whole

    a_whole, a_frac = split(a - 1.0)
    b_whole, b_frac = split(b - 1.0)

    edges = [0.0]
    while edges[-1] < 0.5:
        edges.append(h if edges[-1] == 0.0 else min(2.0 * edges[-1], 0.5))
    edges.append(1.0)
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        if lo == 0.0:
            t, w = roots_jacobi(order, 0.0, a_frac)
            x = half * (1.0 + t)
            # x ** a_frac = half ** a_frac (1 + t) ** a_frac is carried by the rule
            log_rest = (a_frac + 1.0) * math.log(half) + a_whole * np.log(x)
            w = w * np.exp(log_rest + (b - 1.0) * np.log1p(-x) + log_norm)
        elif hi == 1.0:
            t, w = roots_jacobi(order, b_frac, 0.0)
            x = lo + half * (1.0 + t)
            log_rest = (b_frac + 1.0) * math.log(half) + b_whole * np.log1p(-x)
            w = w * np.exp(log_rest + (a - 1.0) * np.log(x) + log_norm)
        else:
            x = lo + half * (1.0 + gl_t)
            w = gl_w * half * np.exp((a - 1.0) * np.log(x) + (b - 1.0) * np.log1p(-x) + log_norm)
        nodes.append(x)
        weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


def _panel_floor(m_horizon: int, a: float, b: float) -> float:
    # resolve both the 1/M layer of the integrand and the bulk of the density;
    # the 2**-7 cap keeps at least 8 panels (128 nodes) per axis
    return min(2.0**-7, 1.0 / (8.0 * m_horizon), 1.0 / (8.0 * (a + b)))


def _expectation(m_horizon: int, ya: float, yb: float, xab: tuple[float, float] | None):
    # E[(1 - (1 - X Y)^M) / Y] with Y ~ Beta(ya, yb) and X ~ Beta(*xab), X = 1 if xab is None
    y, wy = _beta_rule(ya, yb, _panel_floor(m_horizon, ya, yb))
    if xab is None:
        x, wx = np.ones(1), np.ones(1)
    else:
        x, wx = _beta_rule(xab[0], xab[1], _panel_floor(m_horizon, *xab))
    vals = -np.expm1(m_horizon * np.log1p(-np.outer(x, y))) / y[None, :]
    return float(wx @ vals @ wy)


def _check_method(method: str, m_horizon: int) -> str:
    if method not in ("auto", "alternating", "quadrature"):
        raise DomainError(f"unknown psi method {method!r}")
    if method == "auto":
        return "alternating" if m_horizon <= ALTERNATING_MAX_M else "quadrature"
    return method


def psi(
    n: int,
    m_horizon: int,
    sigma: float,
    config: CondimentConfig,
    ell: int,
    method: str = "auto",
) -> float:
    """Condiment-``ell`` analogue of gamma_N^(M); equals it when q = 1.

    ``method`` is ``'alternating'``, ``'quadrature'`` or ``'auto'`` (the
    alternating sum up to ``ALTERNATING_MAX_M``, quadrature beyond).
    """
    sigma = check_sigma(sigma)
    n, m = int(n), int(m_horizon)
    if n < 0 or m < 1:
        raise DomainError("psi needs n >= 0 and a horizon >= 1")
    g = config.weight(ell)
    total = config.total
    if _check_method(method, m) == "alternating":
        ratios = None if config.q == 1 else _rising_ratios(g, total, m)
        return sigma * _alternating(m, sigma, n + 1.0, ratios)
    xab = None if config.q == 1 else (g, total - g)
    scale = sigma * math.exp(log_beta(1.0 - sigma, n + 1.0))
    return scale * _expectation(m, 1.0 - sigma, n + 1.0, xab)


def condiment_posterior_unseen(
    params: SBSPParams,
    config: CondimentConfig,
    counts: CondimentCounts,
    m_horizon: int,
    ell: int,
    method: str = "auto",
) -> NegativeBinomial:
    """NegBin(K_N + c + 1, psi / (psi + gamma_0^(N) + beta)) for condiment ``ell``."""
    if counts.n < 1:
        raise DomainError("counts need n >= 1")
    p = psi(counts.n, m_horizon, params.sigma, config, ell, method)
    g0 = gamma_sum(0, counts.n, params.sigma)
    return NegativeBinomial(counts.k + params.c + 1.0, p / (p + g0 + params.beta))


def sbd_rate(
    params: SBBParams, config: CondimentConfig, n: int, m_horizon: int, ell: int, method: str = "auto"
) -> float:
    """theta sum_{m=1..M} (-1)^(m+1) C(M, m) B(m - a, N + a + k) (g_l)_m / (|g|)_m."""
    n, m = int(n), int(m_horizon)
    if n < 0 or m < 1:
        raise DomainError("sbd_rate needs n >= 0 and a horizon >= 1")
    g = config.weight(ell)
    a = params.alpha
    b = n + a + params.kappa
    if _check_method(method, m) == "alternating":
        ratios = None if config.q == 1 else _rising_ratios(g, config.total, m)
        return params.theta * _alternating(m, a, b, ratios)
    xab = None if config.q == 1 else (g, config.total - g)
    return params.theta * math.exp(log_beta(1.0 - a, b)) * _expectation(m, 1.0 - a, b, xab)


def sbd_posterior_unseen(
    params: SBBParams, config: CondimentConfig, n: int, m_horizon: int, ell: int, method: str = "auto"
) -> Poisson:
    """Poisson law of new condiment-``ell`` features under the non-scaled (3BP) prior."""
    return Poisson(sbd_rate(params, config, n, m_horizon, ell, method))
