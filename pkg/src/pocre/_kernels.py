"""Dispatch to the numba or numpy kernel set (see ``_accel``)."""

from ._accel import NUMBA_ENABLED

if NUMBA_ENABLED:
    from . import _kernels_numba as impl
else:
    from . import _kernels_numpy as impl

__all__ = ["impl"]
