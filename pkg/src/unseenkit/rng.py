"""Seeding conventions.

Every random draw in the package comes from ``numpy.random.Generator`` over
PCG64, seeded with a 64-bit integer.  Replicate ``i`` of a run seeded with
``base`` uses ``derive_seed(base, i)``: the SplitMix64 finalizer applied to
``base + (i + 1) * golden_gamma``.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def _splitmix64(x: int) -> int:
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(base: int, index: int) -> int:
    """Seed for replicate ``index`` of a run seeded with ``base``.

    Distinct indices give distinct seeds (the map is a bijection of the
    64-bit state for fixed ``base``).
    """
    return _splitmix64((int(base) + (int(index) + 1) * _GOLDEN_GAMMA) & _MASK64)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & _MASK64))
