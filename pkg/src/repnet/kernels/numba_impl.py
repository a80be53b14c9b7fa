"""numba-compiled kernels (same bodies as ``_loops``)."""
import types

import numba

from . import _loops

_jit = numba.njit(cache=True, nogil=True)

# Rebind the loop bodies to a namespace where their helpers are compiled too.
_ns = dict(vars(_loops))


def _compile(name):
    fn = getattr(_loops, name)
    clone = types.FunctionType(fn.__code__, _ns, name, fn.__defaults__, fn.__closure__)
    clone.__module__ = __name__
    clone.__qualname__ = name
    _ns[name] = _jit(clone)
    return _ns[name]


_compile("_sqdist")
bfs_bounded = _compile("bfs_bounded")
next_free = _compile("next_free")
greedy_conflict_net = _compile("greedy_conflict_net")
band_pair_count = _compile("band_pair_count")
first_valid = _compile("first_valid")
iso_search = _compile("iso_search")
