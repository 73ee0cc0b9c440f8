"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

The backend is picked once at import time: numba when it is importable,
unless the environment variable ``FWSPLIT_PURE_NUMPY`` is set to a non-empty
value other than ``0``.  ``fwsplit.kernels.BACKEND`` names the active choice.
"""

import os

from . import numpy_backend

_force_numpy = os.environ.get("FWSPLIT_PURE_NUMPY", "") not in ("", "0")

if not _force_numpy:
    try:
        from . import numba_backend as _impl

        BACKEND = "numba"
    except ImportError:
        _impl = numpy_backend
        BACKEND = "numpy"
else:
    _impl = numpy_backend
    BACKEND = "numpy"

jacobi_sweeps = _impl.jacobi_sweeps
project_l1 = _impl.project_l1


def backends():
    """Return the available backend modules keyed by name."""
    out = {"numpy": numpy_backend}
    try:
        from . import numba_backend

        out["numba"] = numba_backend
    except ImportError:
        pass
    return out
