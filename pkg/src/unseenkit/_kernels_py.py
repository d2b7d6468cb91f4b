"""Pure-Python/numpy twin of the compiled kernels in ``_kernels.pyx``.

Signatures and semantics match one-for-one.  The Beta-sum recurrences
perform the same float operations as the compiled loops; the pmf scans
sum in a different order and agree to rounding.
"""

from __future__ import annotations

import math

import numpy as np

NEGBIN = 0
POISSON = 1

_CHUNK = 4096


_SPLIT = 134217729.0


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _fast_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


def _two_prod(a, b):
    p = a * b
    c = _SPLIT * a
    ah = c - (c - a)
    al = a - ah
    c = _SPLIT * b
    bh = c - (c - b)
    bl = b - bh
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _beta_partial_sums(seed, a, b, count, out=None):
    # same double-double recurrence as the compiled loop, operation for operation
    th, tl = seed, 0.0
    sh, sl = 0.0, 0.0
    ab_h, ab_l = _two_sum(a, b)
    for i in range(count):
        u, v = _two_sum(sh, th)
        sh, sl = _fast_two_sum(u, v + (sl + tl))
        if out is not None:
            out[i] = sh + sl
        fi = float(i)
        nh, nl = _two_sum(b, fi)
        dh, dl = _two_sum(ab_h, fi)
        dh, dl = _fast_two_sum(dh, dl + ab_l)
        ph, pl = _two_prod(th, nh)
        mh, ml = _fast_two_sum(ph, pl + (th * nl + tl * nh))
        q1 = mh / dh
        ph, pl = _two_prod(q1, dh)
        r = ((mh - ph) - pl + ml) - q1 * dl
        th, tl = _fast_two_sum(q1, r / dh)
    return sh + sl


def beta_sum(seed, a, b, count):
    """Return sum_{i<count} B(a, b + i) given ``seed = B(a, b)``."""
    if count <= 0:
        return 0.0
    return _beta_partial_sums(float(seed), float(a), float(b), int(count))


def beta_cumsum(seed, a, b, count):
    """Partial sums ``out[j] = sum_{i<=j} B(a, b + i)`` for ``j < count``."""
    out = np.empty(max(int(count), 0), dtype=np.float64)
    if count > 0:
        _beta_partial_sums(float(seed), float(a), float(b), int(count), out)
    return out


def _up_ratios(family, a, b, ks):
    if family == NEGBIN:
        return (ks + a) * b / (ks + 1.0)
    return a / (ks + 1.0)


def _down_ratios(family, a, b, ks):
    if family == NEGBIN:
        return ks / ((ks - 1.0 + a) * b)
    return ks / a


def pmf_range(family, a, b, mode, log_pmf_mode, lo, hi):
    """Probabilities for ``k = lo..hi`` by walking ratios out from ``mode``."""
    n = hi - lo + 1
    out = np.zeros(max(n, 0), dtype=np.float64)
    if n <= 0:
        return out
    w_mode = math.exp(log_pmf_mode)
    if lo <= mode <= hi:
        out[mode - lo] = w_mode
    if lo < mode:
        ks = np.arange(mode, lo, -1, dtype=np.float64)
        down = w_mode * np.cumprod(_down_ratios(family, a, b, ks))
        kk = np.arange(mode - 1, lo - 1, -1)
        keep = kk <= hi
        out[kk[keep] - lo] = down[keep]
    if hi > mode:
        ks = np.arange(mode, hi, dtype=np.float64)
        up = w_mode * np.cumprod(_up_ratios(family, a, b, ks))
        kk = np.arange(mode + 1, hi + 1)
        keep = kk >= lo
        out[kk[keep] - lo] = up[keep]
    return out


def scan(family, a, b, mode, log_pmf_mode, tiny, budget, qs, kstop):
    """Stream the pmf from the lower tail upward; see the compiled twin."""
    qs = np.asarray(qs, dtype=np.float64)
    w = math.exp(log_pmf_mode)
    steps = 0
    k = mode
    while k > 0:
        width = min(_CHUNK, k)
        ks = np.arange(k, k - width, -1, dtype=np.float64)
        ws = w * np.cumprod(_down_ratios(family, a, b, ks))
        below = np.flatnonzero(ws < tiny)
        if below.size:
            take = int(below[0]) + 1
        else:
            take = width
        if steps + take > budget:
            return np.empty(qs.size, dtype=np.int64), 0.0, k, mode, 0.0, False
        steps += take
        w = float(ws[take - 1])
        k -= take
        if below.size:
            break
    lo = k

    ks_out = np.empty(qs.size, dtype=np.int64)
    qi = 0
    cum = 0.0
    cdf_stop = -1.0
    while True:
        ratios = _up_ratios(family, a, b, np.arange(k, k + _CHUNK - 1, dtype=np.float64))
        ws = np.empty(_CHUNK, dtype=np.float64)
        ws[0] = w
        ws[1:] = w * np.cumprod(ratios)
        kk = np.arange(k, k + _CHUNK)
        stop = np.flatnonzero((kk >= mode) & (ws < tiny))
        take = int(stop[0]) + 1 if stop.size else _CHUNK
        if steps + take - 1 > budget:
            partial = cum + float(np.sum(ws[: budget - steps + 1]))
            return ks_out, max(cdf_stop, 0.0), lo, k, partial, False
        steps += take
        cums = cum + np.cumsum(ws[:take])
        while qi < qs.size:
            pos = int(np.searchsorted(cums, qs[qi], side="left"))
            if pos >= take:
                break
            ks_out[qi] = k + pos
            qi += 1
        if k <= kstop < k + take:
            cdf_stop = float(cums[kstop - k])
        cum = float(cums[-1])
        if stop.size:
            k = k + take - 1
            break
        w = float(ws[-1]) * float(_up_ratios(family, a, b, np.float64(k + _CHUNK - 1)))
        k += _CHUNK
    hi = k
    ks_out[qi:] = hi
    if cdf_stop < 0.0:
        cdf_stop = 0.0 if kstop < lo else cum
    return ks_out, cdf_stop, lo, hi, cum, True


def floyd_subsets(sizes, population, uniforms):
    """Uniform random subsets via Floyd's algorithm, one per entry of ``sizes``."""
    sizes = np.asarray(sizes, dtype=np.int64)
    out = np.empty(int(sizes.sum()), dtype=np.int64)
    pos = 0
    us = np.asarray(uniforms, dtype=np.float64).tolist()
    for s in sizes.tolist():
        chosen = set()
        for j in range(population - s, population):
            t = min(int(math.floor(us[pos] * (j + 1))), j)
            if t in chosen:
                t = j
            chosen.add(t)
            out[pos] = t
            pos += 1
    return out
