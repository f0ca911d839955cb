"""Backend selection for the numeric kernels.

Set ``SPARSEMD_DISABLE_NUMBA=1`` to force the pure-numpy code paths. The
numba kernels are also skipped when numba cannot be imported.
"""

import os

_FALSE = {"", "0", "false", "no", "off"}

DISABLE_REQUESTED = os.environ.get("SPARSEMD_DISABLE_NUMBA", "").strip().lower() not in _FALSE

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not DISABLE_REQUESTED


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
