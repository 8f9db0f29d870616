"""Hot numeric kernels, dispatched to numba or numpy by ``QUASISTEP_DISABLE_NUMBA``."""

from .._backend import USE_NUMBA, backend_name
from . import _numpy

if USE_NUMBA:
    from . import _numba as _impl
else:
    _impl = _numpy

lu_factor = _impl.lu_factor
lu_substitute = _impl.lu_substitute
split_skew_apply = _impl.split_skew_apply
split_skew_matrix = _impl.split_skew_matrix
third_difference_apply = _impl.third_difference_apply
third_difference_matrix = _impl.third_difference_matrix
stage_system = _impl.stage_system

__all__ = [
    "USE_NUMBA",
    "backend_name",
    "lu_factor",
    "lu_substitute",
    "split_skew_apply",
    "split_skew_matrix",
    "third_difference_apply",
    "third_difference_matrix",
    "stage_system",
]
