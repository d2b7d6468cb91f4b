"""Time the compiled kernels against their pure-Python twins.

Run with ``python benchmarks/bench_kernels.py``; it needs the extension
to be built (``pip install -e . --no-build-isolation``).
"""

import argparse
import math
import timeit

import numpy as np

from unseenkit import _kernels_py as py
from unseenkit._backend import NEGBIN
from unseenkit.specfun import beta

try:
    from unseenkit import _kernels as cy
except ImportError:
    cy = None


def cases():
    seed = beta(0.5, 50.0)
    rng = np.random.default_rng(0)
    sizes = rng.integers(0, 50, size=2000).astype(np.int64)
    us = rng.random(int(sizes.sum()))
    qs = np.array([0.05, 0.5, 0.95])
    return {
        "beta_sum(10^5 terms)": lambda k: k.beta_sum(seed, 0.5, 50.0, 100_000),
        "beta_cumsum(10^5 terms)": lambda k: k.beta_cumsum(seed, 0.5, 50.0, 100_000),
        "negbin pmf_range(2001)": lambda k: k.pmf_range(NEGBIN, 40.0, 0.9, 351, math.log(0.01), 0, 2000),
        "negbin scan(3 quantiles)": lambda k: k.scan(NEGBIN, 400.0, 0.9, 3591, -4.0, 1e-30, 10**8, qs, 3591),
        "floyd_subsets(2000 rows)": lambda k: k.floyd_subsets(sizes, 200, us),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if cy is None:
        raise SystemExit("compiled extension not built; nothing to compare")
    print(f"{'kernel':<28}{'python [ms]':>14}{'cython [ms]':>14}{'speed-up':>10}")
    for name, fn in cases().items():
        t_py = min(timeit.repeat(lambda: fn(py), number=1, repeat=args.repeat))
        t_cy = min(timeit.repeat(lambda: fn(cy), number=1, repeat=args.repeat))
        print(f"{name:<28}{1e3 * t_py:>14.3f}{1e3 * t_cy:>14.3f}{t_py / t_cy:>9.1f}x")


if __name__ == "__main__":
    main()
