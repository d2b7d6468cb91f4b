"""Binary feature matrices: ingestion, sufficient statistics, subsampling and
the Zipf generator.

Sparse text format
------------------
One sample per line, tokens are whitespace-separated nonnegative decimal
feature ids.  Lines starting with ``#`` are comments.  Every other line is a
sample, so an empty line is a sample with no features.  Serialization writes
ids ascending, single-space separated, LF line endings.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from ._backend import kernels
from .errors import DataError, DomainError
from .rng import make_rng

log = logging.getLogger(__name__)

#: Zipf features with inclusion probability below this are never generated.
ZIPF_MIN_PROB = 2.0**-60


@dataclass(frozen=True)
class BinaryFeatureMatrix:
    """Ordered samples, each a set of feature ids.

    Order matters: prefix statistics (``counts(prefix=...)``) and the
    distinct-feature curve follow it.
    """

    samples: tuple[frozenset[int], ...]
    declared_feature_count: int | None = None
    duplicate_count: int = field(default=0, compare=False)

    @classmethod
    def from_iterable(cls, samples: Iterable[Iterable[int]], **kwargs) -> "BinaryFeatureMatrix":
        return cls(tuple(frozenset(int(i) for i in s) for s in samples), **kwargs)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def n_samples(self) -> int:
        return len(self.samples)

    def occurrences(self) -> int:
        return sum(len(s) for s in self.samples)

    def take(self, indices) -> "BinaryFeatureMatrix":
        """Rows at ``indices``, in that order."""
        return BinaryFeatureMatrix(
            tuple(self.samples[int(i)] for i in indices), self.declared_feature_count
        )

    def head(self, n: int) -> "BinaryFeatureMatrix":
        return BinaryFeatureMatrix(self.samples[:n], self.declared_feature_count)

    def distinct_curve(self) -> np.ndarray:
        """K_l, the number of distinct features in the first l samples, l = 1..L."""
        seen: set[int] = set()
        curve = np.empty(len(self.samples), dtype=np.int64)
        for idx, sample in enumerate(self.samples):
            seen.update(sample)
            curve[idx] = len(seen)
        return curve

    def counts(self, prefix: int | None = None) -> "FeatureCounts":
        return counts(self, self.n_samples if prefix is None else prefix)

    def serialize(self) -> str:
        return "".join(" ".join(map(str, sorted(s))) + "\n" for s in self.samples)


@dataclass(frozen=True)
class FeatureCounts:
    """Sufficient statistics of the first ``n`` samples.

    ``m`` lists per-feature frequencies ordered by feature id, ``f[j-1]`` is
    the number of features seen exactly ``j`` times (length = largest
    frequency), and ``curve[l-1]`` is the distinct count after ``l`` samples.
    """

    n: int
    k: int
    m: tuple[int, ...]
    f: tuple[int, ...]
    curve: tuple[int, ...]
    ids: tuple[int, ...] = field(default=(), compare=False)

    @classmethod
    def from_frequencies(cls, n: int, m: Iterable[int]) -> "FeatureCounts":
        """Counts from a bare frequency vector (no distinct-count curve)."""
        m = tuple(int(x) for x in m)
        if any(x < 1 or x > n for x in m):
            raise DomainError(f"frequencies must lie in 1..{n}")
        return cls(n=int(n), k=len(m), m=m, f=_spectrum(m), curve=())

    def spectrum(self) -> dict[int, int]:
        """Nonzero frequency-of-frequencies as ``{j: f_j}``."""
        return {j + 1: fj for j, fj in enumerate(self.f) if fj}


def _spectrum(m: Iterable[int]) -> tuple[int, ...]:
    tally = Counter(m)
    if not tally:
        return ()
    top = max(tally)
    return tuple(tally.get(j, 0) for j in range(1, top + 1))


def counts(matrix: BinaryFeatureMatrix, prefix: int) -> FeatureCounts:
    """Sufficient statistics over the first ``prefix`` samples."""
    prefix = int(prefix)
    if not 1 <= prefix <= matrix.n_samples:
        raise DomainError(f"prefix must lie in 1..{matrix.n_samples}, got {prefix}")
    tally: Counter[int] = Counter()
    curve = []
    for sample in matrix.samples[:prefix]:
        tally.update(sample)
        curve.append(len(tally))
    ids = tuple(sorted(tally))
    m = tuple(tally[i] for i in ids)
    return FeatureCounts(n=prefix, k=len(ids), m=m, f=_spectrum(m), curve=tuple(curve), ids=ids)


def parse_sparse(text: str | bytes) -> BinaryFeatureMatrix:
    """Parse the sparse sample-lines format.

    Duplicate ids on one line are collapsed; the number collapsed is kept
    in ``duplicate_count`` and logged.

    Raises
    ------
    DataError
        On a non-integer or negative token, with its line number.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    samples = []
    duplicates = 0
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r")
        if line.startswith("#"):
            continue
        ids = []
        for token in line.split():
            if not token.isdigit():
                if token.startswith("-") and token[1:].isdigit():
                    raise DataError(f"negative feature id {token!r}", line=lineno)
                raise DataError(f"feature id {token!r} is not a decimal integer", line=lineno)
            ids.append(int(token))
        sample = frozenset(ids)
        duplicates += len(ids) - len(sample)
        samples.append(sample)
    if duplicates:
        log.warning("collapsed %d duplicate feature ids", duplicates)
    return BinaryFeatureMatrix(tuple(samples), duplicate_count=duplicates)


def read_sparse(path: str | Path) -> BinaryFeatureMatrix:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return parse_sparse(data)
    except UnicodeDecodeError as exc:
        raise DataError(f"{path} is not UTF-8 text") from exc


def write_sparse(matrix: BinaryFeatureMatrix, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(matrix.serialize())


def subsample(matrix: BinaryFeatureMatrix, n: int, seed: int) -> BinaryFeatureMatrix:
    """Uniform random ``n``-subset of the samples, without replacement, in random order."""
    n = int(n)
    if not 0 <= n <= matrix.n_samples:
        raise DomainError(f"cannot draw {n} of {matrix.n_samples} samples")
    order = make_rng(seed).permutation(matrix.n_samples)[:n]
    return matrix.take(order)


@dataclass(frozen=True)
class ZipfConfig:
    """Feature ``k`` in 1..k_max appears in each sample with probability (k + 1) ** -xi."""

    xi: float
    k_max: int
    l: int
    seed: int = 0

    def __post_init__(self):
        if not (self.xi > 0 and math.isfinite(self.xi)):
            raise DomainError(f"xi must be positive, got {self.xi}")
        if self.k_max < 1:
            raise DomainError("k_max must be >= 1")
        if self.l < 0:
            raise DomainError("l must be >= 0")


def zipf_probabilities(xi: float, k_max: int) -> np.ndarray:
    """Inclusion probabilities for features 1..K, truncated where they drop below 2**-60."""
    # (k + 1) ** -xi >= 2 ** -60  <=>  k + 1 <= 2 ** (60 / xi)
    cutoff = min(int(k_max), int(math.floor(2.0 ** min(60.0 / xi, 62.0))) - 1)
    ks = np.arange(1, max(cutoff, 0) + 1, dtype=np.float64)
    probs = (ks + 1.0) ** -float(xi)
    return probs[probs >= ZIPF_MIN_PROB]


def zipf_generate(config: ZipfConfig) -> BinaryFeatureMatrix:
    """Draw ``config.l`` independent Zipf samples.

    Per feature, the number of samples containing it is Binomial(L, pi_k)
    and the samples themselves are a uniform subset of that size, which is
    the same law as L independent Bernoulli(pi_k) inclusions.
    """
    rng = make_rng(config.seed)
    probs = zipf_probabilities(config.xi, config.k_max)
    L = int(config.l)
    if L == 0:
        return BinaryFeatureMatrix((), declared_feature_count=config.k_max)
    sizes = rng.binomial(L, probs).astype(np.int64)
    present = np.flatnonzero(sizes)
    sizes = np.ascontiguousarray(sizes[present])
    uniforms = rng.random(int(sizes.sum()))
    members = kernels.floyd_subsets(sizes, L, uniforms)
    feature_ids = np.repeat(present + 1, sizes)
    order = np.lexsort((feature_ids, members))
    members = members[order]
    feature_ids = feature_ids[order]
    bounds = np.searchsorted(members, np.arange(L + 1))
    samples = tuple(
        frozenset(feature_ids[bounds[i] : bounds[i + 1]].tolist()) for i in range(L)
    )
    return BinaryFeatureMatrix(samples, declared_feature_count=config.k_max)
