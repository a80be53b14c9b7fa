"""Backend selection for the numeric kernels.

Set ``REPNET_NUMBA=0`` to force the pure numpy/python kernels; numba is
used otherwise whenever it imports.  ``REPNET_WORKERS`` caps the thread
pool used by the embarrassingly parallel verification scans.
"""
from __future__ import annotations

import os

_FLAG = os.environ.get("REPNET_NUMBA", "1").strip().lower()

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

USE_NUMBA = _numba is not None and _FLAG not in ("0", "false", "no", "off")


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"


def workers() -> int:
    try:
        n = int(os.environ.get("REPNET_WORKERS", "1"))
    except ValueError:
        n = 1
    return max(1, n)
