"""Optional numba acceleration.

Kernels are written in a numba-compatible subset of Python.  They are
compiled with ``numba.njit`` when numba is importable, unless the
environment variable ``JOINTWG_DISABLE_NUMBA`` is set to a truthy value,
in which case the pure numpy fallbacks are used.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

_FALSY = {"", "0", "false", "no", "off"}

DISABLED = os.environ.get("JOINTWG_DISABLE_NUMBA", "").strip().lower() not in _FALSY
ENABLED = numba is not None and not DISABLED


def optional_njit(*args, **kwargs):
    """``numba.njit`` when acceleration is enabled, identity otherwise."""

    def decorator(func):
        if ENABLED:
            return numba.njit(*args, **kwargs)(func)
        return func

    return decorator
