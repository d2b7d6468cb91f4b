"""Kernel backend selection.

The compiled extension is used when it imports; set ``UNSEENKIT_PURE_PYTHON=1``
to force the numpy fallback.
"""

from __future__ import annotations

import os

if os.environ.get("UNSEENKIT_PURE_PYTHON", "").strip() not in ("", "0"):
    from . import _kernels_py as kernels

    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as kernels

        BACKEND = "python"

NEGBIN = 0
POISSON = 1

__all__ = ["BACKEND", "NEGBIN", "POISSON", "kernels"]
