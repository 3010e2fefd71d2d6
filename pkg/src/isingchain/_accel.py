"""Numba switch.

Set ``ISINGCHAIN_DISABLE_NUMBA=1`` to run every kernel on its pure-numpy
path. Numba missing from the environment has the same effect.
"""
import os

_FLAG = "ISINGCHAIN_DISABLE_NUMBA"

try:
    import numba as _numba
except ImportError:  # pragma: no cover
    _numba = None

NUMBA_AVAILABLE = _numba is not None
NUMBA_ENABLED = NUMBA_AVAILABLE and os.environ.get(_FLAG, "").strip().lower() not in (
    "1", "true", "yes", "on")


def njit(func):
    """Compile ``func`` in nopython mode when numba is usable.

    Always compiles if numba is importable, so both paths stay testable in one
    process; the env flag only decides which path the package dispatches to.
    """
    if not NUMBA_AVAILABLE:
        return func
    return _numba.njit(cache=True, nogil=True)(func)


def backend():
    return "numba" if NUMBA_ENABLED else "numpy"
