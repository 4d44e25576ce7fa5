"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The backend is chosen once at import time. Set ``HODGENET_NUMBA=0`` to force
the numpy implementations (useful for debugging and for platforms without
numba). Both backends expose the same functions with the same return
conventions; ``numpy_backend`` and ``numba_backend`` give direct access for
comparisons and benchmarks.
"""
import os

from . import _np as numpy_backend

try:
    if os.environ.get("HODGENET_NUMBA", "1").strip().lower() in ("0", "false", "no", "off"):
        raise ImportError("numba disabled by HODGENET_NUMBA")
    from . import _nb as numba_backend
except ImportError:
    numba_backend = None

_active = numba_backend if numba_backend is not None else numpy_backend
BACKEND = "numba" if numba_backend is not None else "numpy"

jacobi_eigh = _active.jacobi_eigh
tridiag_ql_eigh = _active.tridiag_ql_eigh
floyd_warshall = _active.floyd_warshall
incircle_scan = _active.incircle_scan

__all__ = [
    "BACKEND",
    "incircle_scan",
    "floyd_warshall",
    "jacobi_eigh",
    "numba_backend",
    "numpy_backend",
    "tridiag_ql_eigh",
]
