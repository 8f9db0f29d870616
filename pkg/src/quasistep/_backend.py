"""Backend selection for the numeric kernels.

Set ``QUASISTEP_DISABLE_NUMBA=1`` to force the pure-numpy kernels. The flag
is read once at import time.
"""

import functools
import os

_FLAG = "QUASISTEP_DISABLE_NUMBA"


def _numba_requested():
    return os.environ.get(_FLAG, "0").strip().lower() not in ("1", "true", "yes", "on")


try:
    import numba as nb
except ImportError:  # pragma: no cover - numba is a declared dependency
    nb = None

USE_NUMBA = nb is not None and _numba_requested()

if nb is not None:
    njit = functools.partial(nb.njit, cache=True, nogil=True)
else:  # pragma: no cover
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
