"""Optional numba acceleration.

Set ``SYMGABOR_NUMBA=0`` before import to force the pure-numpy paths.
"""
import os

_flag = os.environ.get("SYMGABOR_NUMBA", "1").strip().lower()
_wanted = _flag not in ("0", "false", "no", "off")

try:
    if not _wanted:
        raise ImportError
    from numba import njit as _njit

    USE_NUMBA = True

    def jit(func):
        return _njit(cache=True, fastmath=False)(func)

except ImportError:
    USE_NUMBA = False

    def jit(func):
        return func
