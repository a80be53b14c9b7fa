"""Kernel dispatch: numba when available and enabled, numpy otherwise."""
from .._accel import USE_NUMBA

if USE_NUMBA:
    from . import numba_impl as impl
else:
    from . import numpy_impl as impl

bfs_bounded = impl.bfs_bounded
next_free = impl.next_free
greedy_conflict_net = impl.greedy_conflict_net
band_pair_count = impl.band_pair_count
first_valid = impl.first_valid
iso_search = impl.iso_search

__all__ = ["impl", "bfs_bounded", "next_free", "greedy_conflict_net",
           "band_pair_count", "first_valid", "iso_search"]
