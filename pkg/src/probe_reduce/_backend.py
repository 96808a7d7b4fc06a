"""Select the hot-kernel implementation.

``PROBE_REDUCE_JIT``: ``1`` forces numba (error if missing), ``0`` forces the
numpy path, unset means numba when importable.
"""
import os

from . import _loops, _vectorized

_flag = os.environ.get("PROBE_REDUCE_JIT", "").strip().lower()

if _flag in ("0", "false", "no", "off"):
    USE_NUMBA = False
else:
    try:
        import numba
    except ImportError:
        if _flag in ("1", "true", "yes", "on"):
            raise
        USE_NUMBA = False
    else:
        USE_NUMBA = True

if USE_NUMBA:
    _opts = dict(cache=True, nogil=True)
    _loops._rhs = numba.njit(**_opts)(_loops._rhs)
    _loops._mean_rhs = numba.njit(**_opts)(_loops._mean_rhs)
    rk4_gaussian = numba.njit(**_opts)(_loops.rk4_gaussian)
    abs_exp_double_sum = numba.njit(**_opts)(_loops.abs_exp_double_sum)
    BACKEND = "numba"
else:
    rk4_gaussian = _vectorized.rk4_gaussian
    abs_exp_double_sum = _vectorized.abs_exp_double_sum
    BACKEND = "numpy"
