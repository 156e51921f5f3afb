"""Switch between numba-compiled kernels and the plain numpy/Python path.

Set ``STRUCTDIV_NO_NUMBA=1`` before import to force the fallback path.
``STRUCTDIV_THREADS`` sets the default thread count for all-pairs work.
"""
import os

_DISABLED = os.environ.get("STRUCTDIV_NO_NUMBA", "").strip().lower() in {"1", "true", "yes"}

try:
    if _DISABLED:
        raise ImportError
    import numba as _numba
    HAS_NUMBA = True
except ImportError:
    _numba = None
    HAS_NUMBA = False


def njit(*args, **kwargs):
    """``numba.njit`` when available and enabled, otherwise the identity."""
    if HAS_NUMBA:
        return _numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f


if HAS_NUMBA:
    prange = _numba.prange
else:
    prange = range


def default_threads():
    try:
        return max(1, int(os.environ.get("STRUCTDIV_THREADS", "1")))
    except ValueError:
        return 1


def backend():
    return "numba" if HAS_NUMBA else "numpy"
