"""Evaluation harness: accuracy and coverage of unseen-feature predictions
on held-out data.

A replicate draws a random ordering of the dataset, trains every method on
the first N rows and predicts the number of new features in the next m rows
for every horizon m = 1..M.  Rows of the report carry new-feature counts:
``estimate`` is the predicted U, ``truth`` the realized U (K_{N+m} - K_N,
or in rare mode the number of new features seen exactly r times), ``lo`` and
``hi`` the central credible interval of U when requested.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import baselines, sbsp
from .baselines import FreqSpectrum, SBBParams
from .distributions import DiscretePosterior, NegativeBinomial, Poisson
from .ebayes import FitConfig, fit_sbb, fit_sbsp
from .errors import DomainError, UnseenKitError
from .featureset import BinaryFeatureMatrix, FeatureCounts, counts, subsample
from .rng import derive_seed
from .sbsp import SBSPParams
from .specfun import beta_cumsum, gamma_curve, gamma_sum

REPORT_HEADER = ("method", "replicate", "N", "m", "estimate", "truth", "accuracy", "lo", "hi", "status")
COVERAGE_HEADER = ("method", "alpha", "coverage", "covered", "replicates")
BAYESIAN = ("sbsp", "sbb")


def accuracy(k_n: int, estimate: float, k_nm: int) -> float:
    """1 - min(|k_n + estimate - k_nm| / k_nm, 1).

    Examples
    --------
    >>> accuracy(10, 0.0, 20)
    0.5
    """
    if k_nm <= 0:
        raise DomainError("accuracy needs a positive true count")
    if not k_nm >= k_n >= 0:
        raise DomainError(f"need k_nm >= k_n >= 0, got k_n={k_n}, k_nm={k_nm}")
    err = abs(k_n + estimate - k_nm) / k_nm
    if not math.isfinite(err):
        return 0.0
    return 1.0 - min(err, 1.0)


def coverage(intervals: Sequence[tuple[float, float]], truth: Sequence[float]) -> float:
    """Fraction of (lo, hi) intervals containing the matching truth."""
    if len(intervals) != len(truth):
        raise DomainError("intervals and truth differ in length")
    if not intervals:
        raise DomainError("coverage needs at least one interval")
    for lo, hi in intervals:
        if lo > hi:
            raise DomainError(f"interval ({lo}, {hi}) has lo > hi")
    hits = sum(1 for (lo, hi), t in zip(intervals, truth) if lo <= t <= hi)
    return hits / len(intervals)


@dataclass(frozen=True)
class MethodSpec:
    """``sbsp``, ``sbb``, ``jackknife:j`` (j = 1..4) or ``gt:none|binomial|poisson``."""

    name: str
    option: str | int | None = None

    @classmethod
    def parse(cls, text: str) -> "MethodSpec":
        text = text.strip()
        name, _, opt = text.partition(":")
        if name in BAYESIAN and not opt:
            return cls(name)
        if name == "jackknife" and opt in ("1", "2", "3", "4"):
            return cls(name, int(opt))
        if name == "gt" and opt in baselines.GT_SMOOTHINGS:
            return cls(name, opt)
        raise DomainError(f"unknown method {text!r}")

    @property
    def label(self) -> str:
        return self.name if self.option is None else f"{self.name}:{self.option}"

    @property
    def bayesian(self) -> bool:
        return self.name in BAYESIAN


def parse_methods(text: str | Iterable[str]) -> tuple[MethodSpec, ...]:
    items = text.split(",") if isinstance(text, str) else list(text)
    specs = tuple(MethodSpec.parse(t) for t in items if t.strip())
    if not specs:
        raise DomainError("no methods given")
    return specs


@dataclass(frozen=True)
class BenchmarkConfig:
    """Protocol settings.

    ``train`` is a row count (int >= 1) or a fraction in (0, 1) of the
    dataset.  ``horizon`` caps M (default: every held-out row).  ``ci`` is
    the credible level of the reported intervals (Bayesian methods only).
    """

    methods: tuple[MethodSpec, ...]
    train: int | float
    replicates: int = 1
    seed: int = 0
    rare_r: int | None = None
    ci: float | None = None
    horizon: int | None = None
    loo: bool = False
    fit_starts: int = 10

    def __post_init__(self):
        if isinstance(self.methods, str):
            object.__setattr__(self, "methods", parse_methods(self.methods))
        if self.replicates < 1:
            raise DomainError("replicates must be >= 1")
        if self.rare_r is not None and self.rare_r < 1:
            raise DomainError("rare prevalence must be >= 1")
        if self.ci is not None and not 0.0 < self.ci < 1.0:
            raise DomainError("ci must lie in (0, 1)")

    def train_size(self, total: int) -> int:
        t = self.train
        if isinstance(t, float) and t < 1.0:
            if not t > 0.0:
                raise DomainError(f"train fraction must lie in (0, 1), got {t}")
            n = int(math.floor(t * total))
        elif float(t).is_integer():
            n = int(t)
        else:
            raise DomainError(f"train must be a row count or a fraction in (0, 1), got {t}")
        if not 1 <= n < total:
            raise DomainError(f"train size {n} must lie in 1..{total - 1}")
        return n


@dataclass(frozen=True)
class ReportRow:
    method: str
    replicate: int
    N: int
    m: int
    estimate: float | None
    truth: int
    accuracy: float | None
    lo: int | None = None
    hi: int | None = None
    status: str = "ok"

    def as_tuple(self):
        return tuple(getattr(self, k) for k in REPORT_HEADER)


def _thread_cap() -> int:
    try:
        return max(int(os.environ.get("UNSEENKIT_THREADS", "1")), 1)
    except ValueError:
        return 1


# -- truth curves -------------------------------------------------------
def new_feature_curve(order: BinaryFeatureMatrix, n: int, m_max: int) -> np.ndarray:
    """Realized U_N^(m) for m = 1..m_max along the given sample order."""
    curve = order.head(n + m_max).distinct_curve()
    return curve[n:] - curve[n - 1]


def rare_feature_curve(order: BinaryFeatureMatrix, n: int, m_max: int, r: int) -> np.ndarray:
    """Number of features unseen in the first n rows and seen exactly r times in rows n+1..n+m."""
    seen = set().union(*order.samples[:n]) if n else set()
    tally: dict[int, int] = {}
    at_r = 0
    out = np.empty(m_max, dtype=np.int64)
    for idx, sample in enumerate(order.samples[n : n + m_max]):
        for fid in sample:
            if fid in seen:
                continue
            c = tally.get(fid, 0) + 1
            tally[fid] = c
            if c == r:
                at_r += 1
            elif c == r + 1:
                at_r -= 1
        out[idx] = at_r
    return out


# -- per-method predictions ----------------------------------------------
def _sbsp_laws(params: SBSPParams, n: int, k: int, m_max: int, rare: int | None):
    g0 = gamma_sum(0, n, params.sigma)
    r_fail = k + params.c + 1.0
    if rare is None:
        gs = gamma_curve(n, m_max, params.sigma)
        # same arithmetic as sbsp.posterior_unseen, so means agree bit for bit
        return [NegativeBinomial(r_fail, g / (params.beta + g0 + g)) for g in gs]
    laws = [None] * m_max
    for m in range(rare, m_max + 1):
        laws[m - 1] = sbsp.posterior_unseen_rare(params, n, k, m, rare)
    return laws


def _sbb_laws(params: SBBParams, n: int, m_max: int, rare: int | None):
    if rare is None:
        a = params.alpha
        rates = params.theta * beta_cumsum(1.0 - a, params.kappa + a + n, m_max)
        return [Poisson(float(lam)) for lam in rates]
    laws = [None] * m_max
    for m in range(rare, m_max + 1):
        laws[m - 1] = baselines.sbb_posterior_unseen_rare(params, n, m, rare)
    return laws


def _law_mean(law: DiscretePosterior | None) -> float:
    return 0.0 if law is None else float(law.mean)


def _predict(spec: MethodSpec, train: FeatureCounts, m_max: int, config: BenchmarkConfig, seed: int):
    """Estimates for m = 1..m_max, plus the laws for Bayesian methods."""
    n, k = train.n, train.k
    rare = config.rare_r
    if spec.name == "sbsp":
        fit = fit_sbsp(train, FitConfig(starts=config.fit_starts, seed=seed))
        laws = _sbsp_laws(fit.params, n, k, m_max, rare)
        return np.array([_law_mean(l) for l in laws]), laws
    if spec.name == "sbb":
        fit = fit_sbb(train, FitConfig(starts=config.fit_starts, seed=seed))
        laws = _sbb_laws(fit.params, n, m_max, rare)
        return np.array([_law_mean(l) for l in laws]), laws
    if rare is not None:
        raise DomainError(f"{spec.label} has no rare-feature estimate")
    spectrum = FreqSpectrum.from_counts(train)
    if spec.name == "jackknife":
        return np.full(m_max, baselines.jackknife(spectrum, spec.option)), None
    est = [baselines.good_toulmin(spectrum, m, spec.option) for m in range(1, m_max + 1)]
    return np.array(est, dtype=np.float64), None


def _score(k_n: int, estimate: float, truth: int, rare: bool) -> float | None:
    if rare:
        return None if truth == 0 else accuracy(0, estimate, truth)
    if k_n + truth == 0:
        return None
    return accuracy(k_n, estimate, k_n + truth)


def _status_for(exc: BaseException) -> str:
    return f"error:{type(exc).__name__}"


def _run_replicate(matrix: BinaryFeatureMatrix, config: BenchmarkConfig, rep: int) -> list[ReportRow]:
    total = matrix.n_samples
    n = config.train_size(total)
    m_max = total - n if config.horizon is None else min(int(config.horizon), total - n)
    if m_max < 1:
        raise DomainError("no held-out rows to predict")
    seed = derive_seed(config.seed, rep)
    order = subsample(matrix, total, seed)
    train = counts(order, n)
    rare = config.rare_r
    if rare is None:
        truth = new_feature_curve(order, n, m_max)
    else:
        truth = rare_feature_curve(order, n, m_max, rare)
    rows: list[ReportRow] = []
    for spec in config.methods:
        try:
            est, laws = _predict(spec, train, m_max, config, seed)
        except (UnseenKitError, ArithmeticError, ValueError) as exc:
            status = _status_for(exc)
            rows.extend(
                ReportRow(spec.label, rep, n, m, None, int(truth[m - 1]), None, status=status)
                for m in range(1, m_max + 1)
            )
            continue
        for m in range(1, m_max + 1):
            t = int(truth[m - 1])
            e = float(est[m - 1])
            lo = hi = None
            status = "ok"
            if config.ci is not None and laws is not None:
                law = laws[m - 1]
                if law is None:
                    lo = hi = 0
                else:
                    try:
                        lo, hi = law.central_interval(config.ci)
                    except UnseenKitError as exc:
                        status = _status_for(exc)
            acc = _score(train.k, e, t, rare is not None)
            if acc is None and status == "ok":
                status = "zero_truth"
            rows.append(ReportRow(spec.label, rep, n, m, e, t, acc, lo, hi, status))
        if config.loo:
            rows.extend(_loo_rows(spec, order, n, m_max, truth, config, seed, rep))
    return rows


def _loo_rows(spec, order, n, m_max, truth, config, seed, rep) -> list[ReportRow]:
    """Stability band from refitting on each (N - 1)-subset of the training rows.

    Horizons are counted from the full training set, so the left-out row is
    neither training nor held-out data; the band reports the median, min
    and max of the N refitted estimates.
    """
    curves = []
    for drop in range(n):
        keep = [i for i in range(n) if i != drop]
        sub = counts(order.take(keep), n - 1)
        try:
            # predict n + m - (n - 1) = m + 1 rows ahead of the reduced set
            est, _ = _predict(spec, sub, m_max + 1, config, seed)
            curves.append(est[1:])
        except (UnseenKitError, ArithmeticError, ValueError):
            continue
    label = f"{spec.label}/loo"
    if not curves:
        return [ReportRow(label, rep, n, m, None, int(truth[m - 1]), None, status="error:loo")
                for m in range(1, m_max + 1)]
    arr = np.vstack(curves)
    med = np.median(arr, axis=0)
    lo = np.floor(arr.min(axis=0))
    hi = np.ceil(arr.max(axis=0))
    k_n = counts(order, n).k
    out = []
    for m in range(1, m_max + 1):
        t = int(truth[m - 1])
        acc = _score(k_n, float(med[m - 1]), t, config.rare_r is not None)
        status = "ok" if acc is not None else "zero_truth"
        out.append(ReportRow(label, rep, n, m, float(med[m - 1]), t, acc,
                             int(lo[m - 1]), int(hi[m - 1]), status))
    return out


def run_benchmark(matrix: BinaryFeatureMatrix, config: BenchmarkConfig) -> list[ReportRow]:
    """One row per (method, replicate, horizon), sorted deterministically."""
    config.train_size(matrix.n_samples)
    reps = range(config.replicates)
    threads = min(_thread_cap(), config.replicates)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(lambda r: _run_replicate(matrix, config, r), reps))
    else:
        chunks = [_run_replicate(matrix, config, r) for r in reps]
    method_rank = {s.label: i for i, s in enumerate(config.methods)}

    def key(row: ReportRow):
        base = row.method.split("/")[0]
        return (method_rank.get(base, len(method_rank)), row.method, row.replicate, row.m)

    return sorted((row for chunk in chunks for row in chunk), key=key)


def summarize(rows: Iterable[ReportRow], m: int | None = None) -> dict[str, dict]:
    """Median accuracy per method at horizon ``m`` (default: the largest), over ok rows."""
    rows = list(rows)
    if m is None:
        m = max(r.m for r in rows)
    out: dict[str, dict] = {}
    for r in rows:
        if r.m != m:
            continue
        entry = out.setdefault(r.method, {"values": [], "failures": 0})
        if r.status == "ok" and r.accuracy is not None:
            entry["values"].append(r.accuracy)
        else:
            entry["failures"] += 1
    return {
        name: {
            "median_accuracy": float(np.median(e["values"])) if e["values"] else float("nan"),
            "successes": len(e["values"]),
            "failures": e["failures"],
        }
        for name, e in out.items()
    }


# -- coverage -------------------------------------------------------------
@dataclass(frozen=True)
class CoverageRow:
    method: str
    alpha: float
    coverage: float | None
    covered: int
    replicates: int

    def as_tuple(self):
        return tuple(getattr(self, k) for k in COVERAGE_HEADER)


def _interval_hits(laws_by_rep, truths, alpha_grid):
    out = {}
    for alpha in alpha_grid:
        hits = total = 0
        for law, t in zip(laws_by_rep, truths):
            if law is None:
                continue
            lo, hi = law.central_interval(alpha)
            hits += lo <= t <= hi
            total += 1
        out[alpha] = (hits, total)
    return out


def coverage_study(
    matrix: BinaryFeatureMatrix,
    train: int | float,
    replicates: int,
    alpha_grid: Sequence[float],
    seed: int,
    methods: Sequence[str] = BAYESIAN,
    fit_starts: int = 10,
) -> list[CoverageRow]:
    """Coverage of central credible intervals for U_N^(M) at the largest horizon.

    Each replicate reorders the dataset at random, fits on the first N rows
    and checks whether the realized number of new features in the
    remaining rows falls inside the interval at each level in ``alpha_grid``.
    """
    config = BenchmarkConfig(parse_methods(methods), train, replicates, seed, fit_starts=fit_starts)
    for spec in config.methods:
        if not spec.bayesian:
            raise DomainError(f"coverage needs a Bayesian method, got {spec.label}")
    for a in alpha_grid:
        if not 0.0 < a < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {a}")
    total = matrix.n_samples
    n = config.train_size(total)
    m = total - n
    laws: dict[str, list] = {s.label: [] for s in config.methods}
    truths = []
    for rep in range(replicates):
        rseed = derive_seed(seed, rep)
        order = subsample(matrix, total, rseed)
        train_counts = counts(order, n)
        truths.append(int(new_feature_curve(order, n, m)[-1]))
        for spec in config.methods:
            try:
                laws[spec.label].append(posterior_at_horizon(spec, train_counts, m, fit_starts, rseed))
            except (UnseenKitError, ArithmeticError, ValueError):
                laws[spec.label].append(None)
    rows = []
    for spec in config.methods:
        hits = _interval_hits(laws[spec.label], truths, alpha_grid)
        for alpha in alpha_grid:
            h, tot = hits[alpha]
            rows.append(CoverageRow(spec.label, float(alpha), h / tot if tot else None, h, tot))
    return rows


def posterior_at_horizon(spec: MethodSpec | str, train: FeatureCounts, m: int, fit_starts: int, seed: int):
    """Empirical-Bayes posterior law of U at horizon ``m`` for a Bayesian method."""
    if isinstance(spec, str):
        spec = MethodSpec.parse(spec)
    cfg = FitConfig(starts=fit_starts, seed=seed)
    if spec.name == "sbsp":
        return sbsp.posterior_unseen(fit_sbsp(train, cfg).params, train.n, train.k, m)
    if spec.name == "sbb":
        return baselines.sbb_posterior_unseen(fit_sbb(train, cfg).params, train.n, m)
    raise DomainError(f"{spec.label} has no posterior law")


# -- CSV output -----------------------------------------------------------
def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def write_csv(rows: Iterable, header: Sequence[str], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row.as_tuple()])


def report_csv(rows: Iterable[ReportRow]) -> str:
    buf = io.StringIO()
    write_csv(rows, REPORT_HEADER, buf)
    return buf.getvalue()


def coverage_csv(rows: Iterable[CoverageRow]) -> str:
    buf = io.StringIO()
    write_csv(rows, COVERAGE_HEADER, buf)
    return buf.getvalue()
