"""Pointed color-preserving isomorphisms between balls of equal radius.

The search is exhaustive backtracking.  Before it starts, both balls are
partitioned jointly by (distance to center, color, induced degree) and the
partition is refined by neighbour-class multisets until it stabilises;
an isomorphism must respect every class, so a histogram mismatch proves
non-isomorphism and candidate lists shrink to a single class.  Source
vertices are assigned in increasing host id and candidates tried in
increasing target id, so the witness found first is the lexicographically
smallest vertex map.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels
from .balls import PointedBall
from .graph import GraphError

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix(x: np.ndarray) -> np.ndarray:
    # splitmix64 finaliser; wraps modulo 2**64 by design
    z = x.astype(np.uint64) + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _dense_rank(*cols: np.ndarray) -> np.ndarray:
    """Ids 0..k-1 of the distinct rows of the stacked columns, in lexicographic row order."""
    order = np.lexsort(cols[::-1])
    change = np.zeros(order.size, dtype=bool)
    if order.size:
        change[0] = True
        for c in cols:
            sc = c[order]
            change[1:] |= sc[1:] != sc[:-1]
    ids = np.empty(order.size, dtype=np.int64)
    ids[order] = np.cumsum(change) - 1
    return ids


@dataclass(eq=False)
class BallIsomorphism:
    """Vertex map ``source.members[k] -> image[k]`` onto ``target.members``."""

    source: PointedBall
    target: PointedBall
    image: np.ndarray

    def __call__(self, v: int) -> int:
        return int(self.image[self.source.local(v)])

    def apply(self, vertices) -> np.ndarray:
        return self.image[self.source.local(vertices)]

    def as_dict(self) -> dict:
        return {int(a): int(b) for a, b in zip(self.source.members, self.image)}


def joint_classes(b1: PointedBall, b2: PointedBall, max_rounds: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Isomorphism-invariant vertex classes of two balls, with consistent ids."""
    n1 = b1.size
    cls = _dense_rank(np.concatenate([b1.levels, b2.levels]),
                      np.concatenate([b1.colors, b2.colors]),
                      np.concatenate([b1.degrees, b2.degrees]))
    nbrs = np.concatenate([b1.indices, b2.indices + n1])
    deg = np.concatenate([b1.degrees, b2.degrees])
    starts = np.concatenate([b1.indptr[:-1], b2.indptr[:-1] + b1.indptr[-1]])
    n_cls = int(cls.max()) + 1 if cls.size else 0
    has = deg > 0
    for _ in range(max_rounds):
        if nbrs.size == 0:
            break
        sig = np.zeros(cls.size, dtype=np.uint64)
        sig[has] = np.add.reduceat(_mix(cls[nbrs]), starts[has])
        cls = _dense_rank(cls, sig)
        k = int(cls.max()) + 1
        if k == n_cls:
            break
        n_cls = k
    return cls[:n1], cls[n1:]


def _prefilter(b1: PointedBall, b2: PointedBall):
    if b1.radius != b2.radius:
        raise GraphError("ball radii differ")
    if b1.size != b2.size or b1.num_edges != b2.num_edges:
        return None
    if b1.host.colors[b1.center] != b2.host.colors[b2.center]:
        return None
    ca, cb = joint_classes(b1, b2)
    k = int(max(ca.max(), cb.max())) + 1
    if not np.array_equal(np.bincount(ca, minlength=k), np.bincount(cb, minlength=k)):
        return None
    return ca, cb


def ball_isomorphism(b1: PointedBall, b2: PointedBall, max_steps: int = 0) -> BallIsomorphism | None:
    """Lexicographically smallest pointed color-preserving isomorphism, or None.

    ``max_steps`` > 0 caps the search; hitting the cap raises, so a None
    result is always a proof of non-isomorphism.
    """
    cls = _prefilter(b1, b2)
    if cls is None:
        return None
    ca, cb = cls
    n = b1.size
    # anchor = smallest neighbour, when it precedes the vertex in assignment order
    anchor = np.full(n, -1, dtype=np.int64)
    has = np.diff(b1.indptr) > 0
    first = b1.indices[b1.indptr[:-1][has]]
    anchor[has] = np.where(first < np.flatnonzero(has), first, -1)
    bucket = np.lexsort((np.arange(n), cb)).astype(np.int64)
    scls = cb[bucket]
    lo = np.searchsorted(scls, ca, side="left").astype(np.int64)
    hi = np.searchsorted(scls, ca, side="right").astype(np.int64)
    fmap, steps = kernels.iso_search(n, b1.indptr, b1.indices, ca.astype(np.int64), anchor,
                                     b2.indptr, b2.indices, cb.astype(np.int64), bucket, lo, hi,
                                     int(max_steps))
    if steps < 0:
        raise RuntimeError(f"isomorphism search exceeded {max_steps} steps")
    if n and fmap[0] < 0:
        return None
    return BallIsomorphism(b1, b2, b2.members[fmap])


def check_ball_isomorphism(b1: PointedBall, b2: PointedBall, image) -> str | None:
    """Independent validation of a claimed witness; returns a reason when invalid."""
    image = np.asarray(image, dtype=np.int64)
    if b1.radius != b2.radius:
        return "radius mismatch"
    if image.shape != (b1.size,):
        return "map not defined on the whole source ball"
    if b1.size != b2.size or not np.array_equal(np.sort(image), b2.members):
        return "map is not a bijection onto the target ball"
    loc = b2.local(image)
    if image[b1.center_local] != b2.center:
        return "center not mapped to center"
    if not np.array_equal(b1.colors, b2.colors[loc]):
        return "colors not preserved"
    if not np.array_equal(b1.levels, b2.levels[loc]):
        return "distance to center not preserved"
    e1 = b1.local_edges()
    if e1.shape[0] != b2.num_edges:
        return "edge counts differ"
    m = b2.size
    u, v = loc[e1[:, 0]], loc[e1[:, 1]]
    mapped = np.minimum(u, v) * m + np.maximum(u, v)
    e2 = b2.local_edges()
    if not np.isin(mapped, e2[:, 0] * m + e2[:, 1]).all():
        return "edge not preserved"
    return None
