# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops.

Every function here has a pure-Python twin in :mod:`unseenkit._kernels_py`
with the same signature and semantics; :mod:`unseenkit._backend` picks one at
import time.
"""

import numpy as np

from libc.math cimport exp, floor

cdef enum:
    NEGBIN = 0
    POISSON = 1


cdef inline double _up(int family, double a, double b, long long k) noexcept nogil:
    # pmf(k + 1) / pmf(k)
    if family == NEGBIN:
        return (k + a) * b / (k + 1.0)
    return a / (k + 1.0)


cdef inline double _down(int family, double a, double b, long long k) noexcept nogil:
    # pmf(k - 1) / pmf(k), k >= 1
    if family == NEGBIN:
        return k / ((k - 1.0 + a) * b)
    return k / a


# Double-double helpers.  Products use Veltkamp splitting rather than fma so
# the compiled and pure-Python kernels perform the same float operations.

cdef struct dd:
    double hi
    double lo


cdef inline dd _two_sum(double a, double b) noexcept nogil:
    cdef dd r
    cdef double bb
    r.hi = a + b
    bb = r.hi - a
    r.lo = (a - (r.hi - bb)) + (b - bb)
    return r


cdef inline dd _fast_two_sum(double a, double b) noexcept nogil:
    cdef dd r
    r.hi = a + b
    r.lo = b - (r.hi - a)
    return r


cdef inline dd _two_prod(double a, double b) noexcept nogil:
    cdef dd r
    cdef double c, ah, al, bh, bl
    r.hi = a * b
    c = 134217729.0 * a
    ah = c - (c - a)
    al = a - ah
    c = 134217729.0 * b
    bh = c - (c - b)
    bl = b - bh
    r.lo = ((ah * bh - r.hi) + ah * bl + al * bh) + al * bl
    return r


cdef inline dd _dd_mul(dd x, dd y) noexcept nogil:
    cdef dd p = _two_prod(x.hi, y.hi)
    return _fast_two_sum(p.hi, p.lo + (x.hi * y.lo + x.lo * y.hi))


cdef inline dd _dd_div(dd x, dd y) noexcept nogil:
    cdef double q1 = x.hi / y.hi
    cdef dd p = _two_prod(q1, y.hi)
    cdef double r = ((x.hi - p.hi) - p.lo + x.lo) - q1 * y.lo
    return _fast_two_sum(q1, r / y.hi)


cdef inline dd _dd_add(dd x, dd y) noexcept nogil:
    cdef dd s = _two_sum(x.hi, y.hi)
    return _fast_two_sum(s.hi, s.lo + (x.lo + y.lo))


cdef inline dd _beta_step(dd term, double a, double b, double i) noexcept nogil:
    # B(a, b + i + 1) = B(a, b + i) * (b + i) / (a + b + i), all in double-double
    cdef dd num = _two_sum(b, i)
    cdef dd ab = _two_sum(a, b)
    cdef dd den = _two_sum(ab.hi, i)
    den = _fast_two_sum(den.hi, den.lo + ab.lo)
    return _dd_div(_dd_mul(term, num), den)


def beta_sum(double seed, double a, double b, long long count):
    """Return sum_{i<count} B(a, b + i) given ``seed = B(a, b)``.

    Terms and the running sum are carried in double-double precision, so
    the only error of note is the rounding of ``seed``.
    """
    cdef dd term
    cdef dd s
    cdef long long i
    term.hi = seed
    term.lo = 0.0
    s.hi = 0.0
    s.lo = 0.0
    with nogil:
        for i in range(count):
            s = _dd_add(s, term)
            term = _beta_step(term, a, b, <double>i)
    return s.hi + s.lo


def beta_cumsum(double seed, double a, double b, long long count):
    """Partial sums ``out[j] = sum_{i<=j} B(a, b + i)`` for ``j < count``."""
    out = np.empty(count, dtype=np.float64)
    cdef double[::1] view = out
    cdef dd term
    cdef dd s
    cdef long long i
    term.hi = seed
    term.lo = 0.0
    s.hi = 0.0
    s.lo = 0.0
    with nogil:
        for i in range(count):
            s = _dd_add(s, term)
            view[i] = s.hi + s.lo
            term = _beta_step(term, a, b, <double>i)
    return out


def pmf_range(int family, double a, double b, long long mode,
              double log_pmf_mode, long long lo, long long hi):
    """Probabilities for ``k = lo..hi`` by walking ratios out from ``mode``."""
    cdef long long n = hi - lo + 1
    out = np.zeros(max(n, 0), dtype=np.float64)
    if n <= 0:
        return out
    cdef double[::1] view = out
    cdef double w_mode = exp(log_pmf_mode)
    cdef double w
    cdef long long k
    with nogil:
        w = w_mode
        k = mode
        if lo <= k <= hi:
            view[k - lo] = w
        while k > lo and w > 0.0:
            w = w * _down(family, a, b, k)
            k -= 1
            if k <= hi:
                view[k - lo] = w
        w = w_mode
        k = mode
        while k < hi and w > 0.0:
            w = w * _up(family, a, b, k)
            k += 1
            if k >= lo:
                view[k - lo] = w
    return out


def scan(int family, double a, double b, long long mode, double log_pmf_mode,
         double tiny, long long budget, double[::1] qs, long long kstop):
    """Stream the pmf from the lower tail upward.

    Returns ``(ks, cdf_at_kstop, lo, hi, total, complete)`` where ``ks[i]``
    is the smallest k with cdf(k) >= qs[i] (qs sorted ascending).  Terms
    below ``tiny`` on either side of the mode are dropped.  When more than
    ``budget`` terms would be visited the scan stops early, ``complete`` is
    False and ``total`` holds the mass accumulated so far.
    """
    cdef Py_ssize_t nq = qs.shape[0]
    ks_arr = np.empty(nq, dtype=np.int64)
    cdef long long[::1] ks = ks_arr
    cdef double w = exp(log_pmf_mode)
    cdef double cum = 0.0
    cdef double cdf_stop = -1.0
    cdef long long k = mode
    cdef long long lo, hi
    cdef long long steps = 0
    cdef Py_ssize_t qi = 0
    cdef bint blown = False
    with nogil:
        while k > 0:
            w = w * _down(family, a, b, k)
            k -= 1
            steps += 1
            if steps > budget:
                blown = True
                break
            if w < tiny:
                break
    if blown:
        return ks_arr, 0.0, k, mode, 0.0, False
    lo = k
    with nogil:
        while True:
            cum += w
            while qi < nq and cum >= qs[qi]:
                ks[qi] = k
                qi += 1
            if k == kstop:
                cdf_stop = cum
            if k >= mode and w < tiny:
                break
            w = w * _up(family, a, b, k)
            k += 1
            steps += 1
            if steps > budget:
                blown = True
                break
    if blown:
        return ks_arr, cdf_stop, lo, k, cum, False
    hi = k
    while qi < nq:
        ks[qi] = hi
        qi += 1
    if cdf_stop < 0.0:
        cdf_stop = 0.0 if kstop < lo else cum
    return ks_arr, cdf_stop, lo, hi, cum, True


def floyd_subsets(long long[::1] sizes, long long population, double[::1] uniforms):
    """Uniform random subsets via Floyd's algorithm, one per entry of ``sizes``.

    Consumes one uniform per selected element, in order, and returns the
    concatenated member indices (block ``f`` holds ``sizes[f]`` entries).
    """
    cdef Py_ssize_t nf = sizes.shape[0]
    cdef long long total = 0
    cdef Py_ssize_t f
    for f in range(nf):
        total += sizes[f]
    out_arr = np.empty(total, dtype=np.int64)
    cdef long long[::1] out = out_arr
    stamp_arr = np.full(population, -1, dtype=np.int64)
    cdef long long[::1] stamp = stamp_arr
    cdef long long pos = 0
    cdef long long j, t, s
    with nogil:
        for f in range(nf):
            s = sizes[f]
            for j in range(population - s, population):
                t = <long long>floor(uniforms[pos] * (j + 1))
                if t > j:
                    t = j
                if stamp[t] == f:
                    t = j
                stamp[t] = f
                out[pos] = t
                pos += 1
    return out_arr
