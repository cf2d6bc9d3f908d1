"""Optional numba acceleration with a pure-numpy fallback.

Setting the environment variable ``KPZ_EXACT_NO_NUMBA=1`` disables numba
compilation; hot Monte Carlo drivers then run through vectorized numpy
implementations and the scalar kernels stay interpreted.
"""

import os

_env = os.environ.get("KPZ_EXACT_NO_NUMBA", "").strip().lower()
NUMBA_REQUESTED = _env not in ("1", "true", "yes")
NUMBA_ENABLED = False

if NUMBA_REQUESTED:
    try:
        from numba import njit

        NUMBA_ENABLED = True
    except ImportError:
        pass

if not NUMBA_ENABLED:

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def deco(f):
            return f

        return deco
