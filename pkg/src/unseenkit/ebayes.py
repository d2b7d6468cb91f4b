"""Empirical-Bayes fitting: maximize the log EFPF over the prior's
hyperparameters with a multi-start Nelder-Mead search.

Parameters are mapped to an unconstrained space first:

* SB-SP: sigma = clamp(logistic(x1)), c = exp(x2), beta = exp(x3)
* 3BP:   theta = exp(y1), alpha = logistic(y2), kappa = exp(y3) - alpha

Log-scale coordinates are confined to ``[-LOG_BOUND, LOG_BOUND]`` by an
infinite barrier so that a likelihood which keeps increasing towards a
boundary of the parameter space still yields finite parameters.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .baselines import SBBLikelihood, SBBParams
from .errors import DomainError, InsufficientSignalError
from .featureset import FeatureCounts
from .rng import make_rng
from .sbsp import SBSPLikelihood, SBSPParams
from .specfun import SIGMA_MAX, SIGMA_MIN

#: Bound on every log-scale coordinate of the search space.
LOG_BOUND = 25.0


@dataclass(frozen=True)
class FitConfig:
    starts: int = 10
    max_iters: int = 2000
    tol: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.starts < 1:
            raise DomainError("starts must be >= 1")
        if self.max_iters < 1:
            raise DomainError("max_iters must be >= 1")
        if not self.tol > 0.0:
            raise DomainError("tol must be > 0")


class _Minimum(NamedTuple):
    x: np.ndarray
    fun: float


class MinimizeResult(_Minimum):
    """``(x, fun)`` pair carrying ``nit``, ``nfev`` and ``converged`` as attributes."""

    def __new__(cls, x, fun, nit: int, nfev: int, converged: bool):
        self = super().__new__(cls, x, fun)
        self.nit = nit
        self.nfev = nfev
        self.converged = converged
        return self


def minimize(
    objective: Callable[[np.ndarray], float],
    x0: Sequence[float],
    config: FitConfig | None = None,
    *,
    max_iters: int | None = None,
    tol: float | None = None,
    initial_step: float | Sequence[float] | None = None,
) -> MinimizeResult:
    """Nelder-Mead simplex search for a local minimum of ``objective``.

    Reflection, expansion, contraction and shrink coefficients are
    1, 2, 0.5 and 0.5.  The search stops when both the simplex diameter
    (max-norm distance of the vertices from the best one) and the spread of
    objective values drop to ``tol``, or after ``max_iters`` iterations.
    Non-finite objective values are treated as +inf.

    ``initial_step`` sets the edge of the starting simplex per coordinate;
    by default it is 5% of each nonzero coordinate and 0.00025 otherwise.

    Examples
    --------
    >>> x, f = minimize(lambda v: (v[0] - 3.0) ** 2, [0.0])
    >>> round(float(x[0]), 6)
    3.0
    """
    config = config or FitConfig()
    max_iters = config.max_iters if max_iters is None else int(max_iters)
    tol = config.tol if tol is None else float(tol)
    x0 = np.atleast_1d(np.asarray(x0, dtype=np.float64)).copy()
    dim = x0.size
    nfev = 0

    def f(x):
        nonlocal nfev
        nfev += 1
        val = float(objective(x))
        return val if math.isfinite(val) else math.inf

    f0 = f(x0)
    if not math.isfinite(f0):
        raise DomainError("objective is not finite at the starting point")

    if initial_step is None:
        steps = np.where(x0 != 0.0, 0.05 * x0, 0.00025)
    else:
        steps = np.broadcast_to(np.asarray(initial_step, dtype=np.float64), (dim,)).copy()
    simplex = np.vstack([x0] + [x0 + steps[i] * np.eye(dim)[i] for i in range(dim)])
    fvals = np.array([f0] + [f(v) for v in simplex[1:]])

    converged = False
    nit = 0
    while nit < max_iters:
        order = np.argsort(fvals, kind="stable")
        simplex, fvals = simplex[order], fvals[order]
        diameter = float(np.max(np.abs(simplex[1:] - simplex[0])))
        spread = float(np.max(np.abs(fvals[1:] - fvals[0]))) if math.isfinite(fvals[-1]) else math.inf
        if diameter <= tol and spread <= tol:
            converged = True
            break
        nit += 1
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + (centroid - worst)
        fr = f(xr)
        if fr < fvals[0]:
            xe = centroid + 2.0 * (centroid - worst)
            fe = f(xe)
            if fe < fr:
                simplex[-1], fvals[-1] = xe, fe
            else:
                simplex[-1], fvals[-1] = xr, fr
            continue
        if fr < fvals[-2]:
            simplex[-1], fvals[-1] = xr, fr
            continue
        if fr < fvals[-1]:
            # outside contraction
            xc = centroid + 0.5 * (xr - centroid)
            fc = f(xc)
            if fc <= fr:
                simplex[-1], fvals[-1] = xc, fc
                continue
        else:
            # inside contraction
            xc = centroid + 0.5 * (worst - centroid)
            fc = f(xc)
            if fc < fvals[-1]:
                simplex[-1], fvals[-1] = xc, fc
                continue
        # shrink towards the best vertex
        simplex[1:] = simplex[0] + 0.5 * (simplex[1:] - simplex[0])
        fvals[1:] = [f(v) for v in simplex[1:]]
    best = int(np.argmin(fvals))
    return MinimizeResult(simplex[best].copy(), float(fvals[best]), nit, nfev, converged)


@dataclass(frozen=True)
class StartRecord:
    """Diagnostics of one start of a multi-start fit."""

    index: int
    initial: dict
    loglik: float
    converged: bool
    evaluations: int
    iterations: int


@dataclass(frozen=True)
class FitResult:
    params: SBSPParams | SBBParams
    loglik: float
    converged: bool
    evaluations: int
    start_index: int
    n: int
    k: int
    starts: tuple[StartRecord, ...] = field(default=(), compare=False)

    def to_dict(self) -> dict:
        doc = self.params.to_dict()
        doc.update(
            loglik=self.loglik,
            n=self.n,
            k=self.k,
            starts=len(self.starts),
            converged=self.converged,
            evaluations=self.evaluations,
            start_index=self.start_index,
        )
        return doc


def _expit(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def _logit(p: float) -> float:
    return math.log(p) - math.log1p(-p)


def sbsp_from_x(x) -> SBSPParams:
    sigma = min(max(_expit(float(x[0])), SIGMA_MIN), SIGMA_MAX)
    return SBSPParams(sigma, math.exp(float(x[1])), math.exp(float(x[2])))


def sbsp_to_x(params: SBSPParams) -> np.ndarray:
    return np.array([_logit(params.sigma), math.log(params.c), math.log(params.beta)])


def sbb_from_x(y) -> SBBParams:
    alpha = min(max(_expit(float(y[1])), SIGMA_MIN), SIGMA_MAX)
    return SBBParams(math.exp(float(y[0])), alpha, math.exp(float(y[2])) - alpha)


def sbb_to_x(params: SBBParams) -> np.ndarray:
    return np.array(
        [math.log(params.theta), _logit(params.alpha), math.log(params.kappa + params.alpha)]
    )


def _loguniform(rng, lo, hi):
    return math.exp(rng.uniform(math.log(lo), math.log(hi)))


def _sbsp_starts(config: FitConfig, counts: FeatureCounts) -> list[np.ndarray]:
    rng = make_rng(config.seed)
    out = []
    for _ in range(config.starts):
        sigma = rng.uniform(0.1, 0.9)
        c = _loguniform(rng, 0.1, 100.0)
        beta = _loguniform(rng, 0.1, 10.0)
        out.append(sbsp_to_x(SBSPParams(sigma, c, beta)))
    return out


def _sbb_starts(config: FitConfig, counts: FeatureCounts) -> list[np.ndarray]:
    from .specfun import beta_sum

    rng = make_rng(config.seed)
    out = []
    for _ in range(config.starts):
        alpha = rng.uniform(0.1, 0.9)
        kappa = _loguniform(rng, 0.1, 100.0) - alpha
        # theta at its profile optimum k / sum B(1 - alpha, kappa + alpha + n - 1)
        theta = max(counts.k, 1) / beta_sum(1.0 - alpha, kappa + alpha, counts.n)
        out.append(sbb_to_x(SBBParams(theta, alpha, kappa)))
    return out


def _thread_cap() -> int:
    raw = os.environ.get("UNSEENKIT_THREADS", "")
    try:
        cap = int(raw)
    except ValueError:
        cap = 1
    return max(cap, 1)


def _run_fit(loglik, from_x, log_axes, starts_x, config, counts, initial_step=0.5):
    def objective(x):
        if np.any(np.abs(x[log_axes]) > LOG_BOUND):
            return math.inf
        try:
            return -loglik(from_x(x))
        except DomainError:
            return math.inf

    def one(idx_x):
        idx, x0 = idx_x
        res = minimize(objective, x0, config, initial_step=initial_step)
        return idx, x0, res

    threads = min(_thread_cap(), len(starts_x))
    jobs = list(enumerate(starts_x))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, jobs))
    else:
        results = [one(j) for j in jobs]

    records = []
    best = None
    for idx, x0, res in sorted(results, key=lambda r: r[0]):
        ll = -res.fun
        records.append(
            StartRecord(idx, from_x(x0).to_dict(), ll, res.converged, res.nfev, res.nit)
        )
        # max by loglik, ties to the lowest start index
        if best is None or ll > -best[2].fun:
            best = (idx, x0, res)
    idx, _, res = best
    params = from_x(res.x)
    return FitResult(
        params=params,
        loglik=loglik(params),
        converged=res.converged,
        evaluations=sum(r.evaluations for r in records),
        start_index=idx,
        n=counts.n,
        k=counts.k,
        starts=tuple(records),
    )


def _check_signal(counts: FeatureCounts):
    if counts.k < 1:
        raise InsufficientSignalError("no features observed; the likelihood has no interior optimum")
    if counts.n < 1:
        raise InsufficientSignalError("no samples observed")


def fit_sbsp(counts: FeatureCounts, config: FitConfig | None = None) -> FitResult:
    """Maximize the SB-SP log EFPF over (sigma, c, beta)."""
    config = config or FitConfig()
    _check_signal(counts)
    lik = SBSPLikelihood(counts)

    def loglik(p: SBSPParams) -> float:
        return lik(p.sigma, p.c, p.beta)

    return _run_fit(
        loglik, sbsp_from_x, np.array([1, 2]), _sbsp_starts(config, counts), config, counts
    )


def fit_sbb(counts: FeatureCounts, config: FitConfig | None = None) -> FitResult:
    """Maximize the 3BP log EFPF over (theta, alpha, kappa)."""
    config = config or FitConfig()
    _check_signal(counts)
    lik = SBBLikelihood(counts)

    def loglik(p: SBBParams) -> float:
        return lik(p.theta, p.alpha, p.kappa)

    return _run_fit(
        loglik, sbb_from_x, np.array([0, 2]), _sbb_starts(config, counts), config, counts
    )
