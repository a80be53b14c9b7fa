"""Colored simple graphs stored in CSR form, with hop-count metric helpers.

Vertices are the internal indices ``0..n-1``; optional ``labels`` keep the
external ids read from files (sorted ascending, so index order and label
order agree).  A graph cut out of a larger object may mark ``boundary``
vertices, whose neighbourhoods are known to be incomplete.
"""
from __future__ import annotations

import threading
from typing import Iterable

import numpy as np

from .. import kernels
from ..metric_core import FiniteMetricSpace


class GraphError(ValueError):
    pass


class ColoredGraph:
    def __init__(self, indptr, indices, colors, labels=None, boundary=None):
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self.n = self.indptr.shape[0] - 1
        self.colors = np.ascontiguousarray(colors, dtype=np.int64)
        if self.colors.shape != (self.n,):
            raise GraphError("one color per vertex required")
        if labels is None:
            self.labels = np.arange(self.n, dtype=np.int64)
        else:
            self.labels = np.asarray(labels, dtype=np.int64)
            if self.labels.shape != (self.n,) or np.any(np.diff(self.labels) <= 0):
                raise GraphError("vertex labels must be strictly increasing")
        self.boundary = None if boundary is None else np.asarray(boundary, dtype=bool)
        self._local = threading.local()
        self._bdist = None

    @classmethod
    def from_edges(cls, n: int, edges, colors=None, labels=None, boundary=None) -> "ColoredGraph":
        """Build from an (m, 2) array of index pairs; duplicates merge, loops are rejected."""
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise GraphError("edge endpoint out of range")
        if np.any(e[:, 0] == e[:, 1]):
            raise GraphError("self-loops are not allowed")
        both = np.concatenate([e, e[:, ::-1]])
        both = np.unique(both, axis=0) if both.size else both
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, both[:, 0] + 1, 1)
        indptr = np.cumsum(indptr)
        colors = np.ones(n, dtype=np.int64) if colors is None else colors
        return cls(indptr, both[:, 1], colors, labels, boundary)

    def with_colors(self, colors) -> "ColoredGraph":
        return ColoredGraph(self.indptr, self.indices, colors, self.labels, self.boundary)

    # -- structure -------------------------------------------------------
    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def max_degree(self) -> int:
        return int(self.degrees.max()) if self.n else 0

    @property
    def num_edges(self) -> int:
        return int(self.indices.shape[0] // 2)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        row = self.neighbors(u)
        k = np.searchsorted(row, v)
        return bool(k < row.size and row[k] == v)

    def edges(self) -> np.ndarray:
        """(m, 2) array of edges u < v in lexicographic order."""
        rows = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees)
        keep = rows < self.indices
        return np.column_stack([rows[keep], self.indices[keep]])

    # -- hop metric ------------------------------------------------------
    def _scratch(self):
        loc = self._local
        if getattr(loc, "dist", None) is None:
            loc.dist = np.full(self.n, -1, dtype=np.int64)
            loc.out = np.empty(self.n, dtype=np.int64)
        return loc.dist, loc.out

    def bfs(self, sources, radius: int = -1) -> tuple[np.ndarray, np.ndarray]:
        """Vertices within ``radius`` hops of ``sources`` (sorted) and their distances."""
        src = np.atleast_1d(np.asarray(sources, dtype=np.int64))
        dist, out = self._scratch()
        c = kernels.bfs_bounded(self.indptr, self.indices, src, int(radius), dist, out)
        verts = np.sort(out[:c])
        d = dist[verts].copy()
        dist[verts] = -1
        return verts, d

    def distances_from(self, sources, radius: int = -1) -> np.ndarray:
        """Full array of hop distances to ``sources`` (-1 where beyond ``radius``/unreachable)."""
        verts, d = self.bfs(sources, radius)
        full = np.full(self.n, -1, dtype=np.int64)
        full[verts] = d
        return full

    def hop_distance(self, u: int, v: int) -> float:
        full = self.distances_from(u)
        return float(full[v]) if full[v] >= 0 else float("inf")

    def is_connected(self) -> bool:
        if self.n == 0:
            return True
        verts, _ = self.bfs(0)
        return verts.size == self.n

    def boundary_distance(self) -> np.ndarray:
        """Hop distance of each vertex to the boundary set (n + 1 when there is none)."""
        if self._bdist is None:
            if self.boundary is None or not self.boundary.any():
                self._bdist = np.full(self.n, self.n + 1, dtype=np.int64)
            else:
                d = self.distances_from(np.flatnonzero(self.boundary))
                d[d < 0] = self.n + 1
                self._bdist = d
        return self._bdist

    def interior(self, R: int) -> np.ndarray:
        """Mask of vertices whose R-ball is faithful (every boundary vertex at distance >= R)."""
        return self.boundary_distance() >= R

    def eccentricity(self, v: int) -> int:
        _, d = self.bfs(v)
        return int(d.max())

    def window_radius(self, v: int) -> int:
        """Largest R for which D(v, R) is faithful and still a proper ball of its component."""
        return int(min(self.boundary_distance()[v], self.eccentricity(v)))


class HopMetricSpace(FiniteMetricSpace):
    """A colored graph viewed as a finite metric space (hop distance)."""

    def __init__(self, graph: ColoredGraph):
        self.graph = graph
        super().__init__(range(graph.n), graph.hop_distance)

    def within(self, x, r: float, strict: bool = False) -> list:
        if r < 0 or (strict and r <= 0):
            return []
        # hop distances are integers: d < r  <=>  d <= ceil(r) - 1
        R = int(np.ceil(r)) - 1 if strict else int(np.floor(r))
        verts, _ = self.graph.bfs(x, R)
        return [int(v) for v in verts]

    def distances_to_set(self, Q: Iterable, ambient=None) -> np.ndarray:
        Q = np.fromiter(Q, dtype=np.int64)
        amb = np.arange(self.graph.n) if ambient is None else np.asarray(ambient, dtype=np.int64)
        if Q.size == 0:
            return np.full(amb.size, np.inf)
        d = self.graph.distances_from(Q).astype(float)
        d[d < 0] = np.inf
        return d[amb]


def path_graph(n: int, colors=None, ends_are_boundary: bool = True) -> ColoredGraph:
    """Path 0 - 1 - ... - (n-1); by default its two ends mark the window boundary."""
    e = np.column_stack([np.arange(n - 1), np.arange(1, n)]) if n > 1 else np.empty((0, 2))
    boundary = None
    if ends_are_boundary and n:
        boundary = np.zeros(n, dtype=bool)
        boundary[[0, n - 1]] = True
    return ColoredGraph.from_edges(n, e, colors, boundary=boundary)


def cycle_graph(n: int, colors=None) -> ColoredGraph:
    if n < 3:
        raise GraphError("a cycle needs at least 3 vertices")
    v = np.arange(n)
    return ColoredGraph.from_edges(n, np.column_stack([v, (v + 1) % n]), colors)
