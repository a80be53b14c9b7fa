"""Pointed balls D(x, R) as self-contained induced colored subgraphs."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import ColoredGraph, GraphError


@dataclass(eq=False)
class PointedBall:
    """The induced colored subgraph on vertices within R hops of ``center``.

    ``members`` are sorted host vertices; ``levels``, ``colors`` and the
    local CSR arrays are aligned with them.
    """

    host: ColoredGraph
    center: int
    radius: int
    members: np.ndarray
    levels: np.ndarray
    colors: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray

    @property
    def size(self) -> int:
        return int(self.members.shape[0])

    @property
    def center_local(self) -> int:
        return int(np.searchsorted(self.members, self.center))

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def num_edges(self) -> int:
        return int(self.indices.shape[0] // 2)

    @property
    def truncated(self) -> bool:
        """True when the host's boundary lies strictly inside the ball."""
        return bool(self.host.boundary_distance()[self.center] < self.radius)

    def local(self, vertices) -> np.ndarray:
        """Positions of host vertices within ``members``; raises if any is absent."""
        v = np.asarray(vertices, dtype=np.int64)
        pos = np.searchsorted(self.members, v)
        pos_c = np.minimum(pos, self.size - 1)
        if np.any(self.members[pos_c] != v):
            raise GraphError("vertex outside the ball")
        return pos_c

    def contains(self, vertices) -> np.ndarray:
        v = np.asarray(vertices, dtype=np.int64)
        pos = np.minimum(np.searchsorted(self.members, v), self.size - 1)
        return self.members[pos] == v

    def local_edges(self) -> np.ndarray:
        rows = np.repeat(np.arange(self.size, dtype=np.int64), self.degrees)
        keep = rows < self.indices
        return np.column_stack([rows[keep], self.indices[keep]])


def hop_ball(graph: ColoredGraph, x: int, R: int) -> PointedBall:
    if R < 0:
        raise GraphError("ball radius must be non-negative")
    if not 0 <= x < graph.n:
        raise GraphError(f"vertex {x} not in graph")
    members, levels = graph.bfs(x, int(R))
    starts = graph.indptr[members]
    lens = graph.indptr[members + 1] - starts
    total = int(lens.sum())
    offs = np.repeat(starts - np.concatenate(([0], np.cumsum(lens)[:-1])), lens)
    nb = graph.indices[offs + np.arange(total)]
    rows = np.repeat(np.arange(members.size, dtype=np.int64), lens)
    pos = np.minimum(np.searchsorted(members, nb), members.size - 1)
    keep = members[pos] == nb
    local_indptr = np.zeros(members.size + 1, dtype=np.int64)
    local_indptr[1:] = np.cumsum(np.bincount(rows[keep], minlength=members.size))
    return PointedBall(graph, int(x), int(R), members, levels, graph.colors[members],
                       local_indptr, pos[keep].astype(np.int64))
