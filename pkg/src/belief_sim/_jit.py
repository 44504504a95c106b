"""Numba backend selection.

The hot sampling kernels are written in nopython-compatible style and
compiled with ``@njit`` when numba is available. Setting the environment
variable ``BELIEF_SIM_NUMBA`` to ``0``/``false``/``off`` (or running without
numba installed) selects the pure NumPy/Python fallback: the same source,
uncompiled. Both paths produce bit-identical results; only speed differs.

The flag is read once at import time.
"""

import os


def _numba_enabled() -> bool:
    flag = os.environ.get("BELIEF_SIM_NUMBA", "").strip().lower()
    if flag in {"0", "false", "off", "no"}:
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


NUMBA_ENABLED = _numba_enabled()
BACKEND = "numba" if NUMBA_ENABLED else "numpy"

if NUMBA_ENABLED:
    from numba import njit
else:

    def njit(*args, **kwargs):
        """No-op stand-in for numba.njit."""
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap
