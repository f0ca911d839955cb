"""Hot loops, dispatched to numba or numpy according to ``sparsemd._accel``."""

from .._accel import USE_NUMBA
from . import _numpy

NONE, REUSE, INJECT = _numpy.NONE, _numpy.REUSE, _numpy.INJECT

if USE_NUMBA:
    from . import _numba as _impl
else:
    _impl = _numpy

slot_assign = _impl.slot_assign
iht_batch = _impl.iht_batch
injection_run = _impl.injection_run
hard_threshold = _numpy.hard_threshold

__all__ = ["slot_assign", "iht_batch", "injection_run", "hard_threshold", "NONE", "REUSE", "INJECT"]
