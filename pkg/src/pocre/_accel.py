"""Backend selection for the compiled kernels.

Set ``POCRE_DISABLE_NUMBA=1`` to force the vectorised numpy fallback, e.g. to
benchmark the two paths against each other or on platforms without numba.
"""

import functools
import os

_FLAG = os.environ.get("POCRE_DISABLE_NUMBA", "").strip().lower()

try:
    import numba as nb
except ImportError:  # pragma: no cover - numba is a declared dependency
    nb = None

NUMBA_ENABLED = nb is not None and _FLAG not in ("1", "true", "yes", "on")

if nb is not None:
    njit = functools.partial(nb.njit, cache=True, nogil=True)
else:  # pragma: no cover
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


def backend_name():
    return "numba" if NUMBA_ENABLED else "numpy"
