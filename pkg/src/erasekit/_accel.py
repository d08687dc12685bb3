"""Backend selection for the hot numeric kernels.

Numba is used when it imports and ``ERASEKIT_DISABLE_NUMBA`` is unset (or set
to ``0``/empty).  Setting the variable to anything else forces the pure-numpy
implementations, which are always importable and produce identical results.
The compiled variants stay importable either way so the benchmark can compare
both paths in one process.
"""

from __future__ import annotations

import os

_FLAG = os.environ.get("ERASEKIT_DISABLE_NUMBA", "").strip().lower()
DISABLED_BY_ENV = _FLAG not in ("", "0", "false", "no")

try:
    from numba import njit as _njit

    NUMBA_IMPORTABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_IMPORTABLE = False
    _njit = None

USE_NUMBA = NUMBA_IMPORTABLE and not DISABLED_BY_ENV
BACKEND = "numba" if USE_NUMBA else "numpy"


def maybe_njit(func):
    """Compile ``func`` with numba if it is importable, else return ``None``."""
    if not NUMBA_IMPORTABLE:
        return None
    return _njit(cache=True, nogil=True)(func)
