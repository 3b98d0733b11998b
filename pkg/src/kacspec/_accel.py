"""Numba toggle.

Set ``KACSPEC_DISABLE_NUMBA=1`` to force the pure-numpy kernels. Numba is also
skipped silently if it cannot be imported.
"""
import os

_flag = os.environ.get("KACSPEC_DISABLE_NUMBA", "").strip().lower()
_disabled = _flag in ("1", "true", "yes", "on")

try:
    if _disabled:
        raise ImportError
    import numba
    from numba import njit, prange

    # the system TBB is often too old for numba; the workqueue layer always works
    if os.environ.get("NUMBA_THREADING_LAYER") is None:
        numba.config.THREADING_LAYER = "workqueue"
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False
    prange = range

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


def use_numba():
    return HAVE_NUMBA
