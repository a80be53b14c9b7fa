"""Pattern statistics on colored graphs: ball agreement, recurrence sets and
partial quasi-isometry checks.

Statistics that stand in for properties of infinite graphs are restricted
to vertices whose balls avoid the boundary of the sampled window.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .balls import PointedBall, hop_ball
from .graph import ColoredGraph, GraphError
from .isomorphism import ball_isomorphism


class NotRepetitive(GraphError):
    """No occurrence of the base pattern in the window."""


def agreement_radius(g1: ColoredGraph, x1: int, g2: ColoredGraph, x2: int, R_max: int) -> tuple[int, bool]:
    """Largest R <= R_max with isomorphic pointed R-balls (-1 if none) and a saturation flag."""
    if g1.colors[x1] != g2.colors[x2]:
        return -1, False
    best = -1
    for R in range(int(R_max) + 1):
        if ball_isomorphism(hop_ball(g1, x1, R), hop_ball(g2, x2, R)) is None:
            break
        best = R
    return best, best == R_max


def gstar_distance(g1: ColoredGraph, x1: int, g2: ColoredGraph, x2: int, R_max: int) -> float:
    """2**-R* for the agreement radius R*; 2.0 when even the centers differ, 0.0 when saturated."""
    R, saturated = agreement_radius(g1, x1, g2, x2, R_max)
    if R < 0:
        return 2.0
    if saturated:
        return 0.0
    return 2.0 ** (-R)


class OmegaOracle:
    """Membership in Omega(R) = {x : D(p, R) ~ D(x, R)}, with cached witnesses.

    ``restrict`` optionally narrows the set to a caller-chosen subset.
    """

    def __init__(self, graph: ColoredGraph, p: int, R: int, restrict: Iterable[int] | None = None):
        self.graph = graph
        self.p = int(p)
        self.R = int(R)
        self.pattern = hop_ball(graph, p, R)
        if self.pattern.truncated:
            raise GraphError(f"the {R}-ball at the base point is truncated by the window")
        self.restrict = None if restrict is None else frozenset(int(v) for v in restrict)
        self._cache: dict[int, np.ndarray | None] = {}
        self._deg = graph.degrees

    def witness(self, x: int) -> np.ndarray | None:
        """Image array (aligned with ``pattern.members``) of the lexicographically smallest witness."""
        x = int(x)
        if x in self._cache:
            return self._cache[x]
        img = None
        g = self.graph
        same_deg = self.R == 0 or self._deg[x] == self._deg[self.p]
        if (self.restrict is None or x in self.restrict) and g.colors[x] == g.colors[self.p] and same_deg:
            if x == self.p:
                img = self.pattern.members.copy()
            else:
                iso = ball_isomorphism(self.pattern, hop_ball(g, x, self.R))
                img = None if iso is None else iso.image
        self._cache[x] = img
        return img

    def __contains__(self, x: int) -> bool:
        return self.witness(x) is not None


def _check_window(graph: ColoredGraph, R: int, window) -> np.ndarray:
    w = np.unique(np.asarray(list(window) if not isinstance(window, np.ndarray) else window, dtype=np.int64))
    bad = w[~graph.interior(R)[w]]
    if bad.size:
        raise GraphError(f"window vertices {bad[:5].tolist()} do not have faithful {R}-balls")
    return w


def omega_set(graph: ColoredGraph, p: int, R: int, window, oracle: OmegaOracle | None = None) -> np.ndarray:
    """Sorted window vertices whose R-ball is isomorphic to the R-ball at ``p``."""
    w = _check_window(graph, R, window)
    orc = oracle or OmegaOracle(graph, p, R)
    return np.array([x for x in w if x in orc], dtype=np.int64)


def repetitivity_radius(graph: ColoredGraph, p: int, R: int, window,
                        oracle: OmegaOracle | None = None) -> float:
    """Covering radius of Omega(R) over the window (hop distance in the whole graph)."""
    w = _check_window(graph, R, window)
    om = omega_set(graph, p, R, w, oracle)
    if om.size == 0:
        raise NotRepetitive(f"not repetitive at R={R} in window: no occurrence of the base pattern")
    d = graph.distances_from(om)[w]
    return float("inf") if np.any(d < 0) else float(d.max())


@dataclass
class PersistenceTable:
    """``depth[a, b]`` counts the radii 0..R_max at which the pointed balls of
    ``vertices[a]`` and ``vertices[b]`` agree (R* + 1); 0 means the centers differ."""

    vertices: np.ndarray
    R_max: int
    depth: np.ndarray
    summary: dict = field(default_factory=dict)


def persistence_depth(graph: ColoredGraph, window, R_max: int) -> PersistenceTable:
    w = _check_window(graph, R_max, window)
    n = w.size
    depth = np.zeros((n, n), dtype=np.int64)
    np.fill_diagonal(depth, R_max + 1)
    balls: dict[tuple[int, int], PointedBall] = {}

    def ball(x, R):
        key = (int(x), R)
        if key not in balls:
            balls[key] = hop_ball(graph, x, R)
        return balls[key]

    col = graph.colors
    for a in range(n):
        for b in range(a + 1, n):
            x, y = w[a], w[b]
            k = 0
            if col[x] == col[y]:
                for R in range(R_max + 1):
                    if ball_isomorphism(ball(x, R), ball(y, R)) is None:
                        break
                    k += 1
            depth[a, b] = depth[b, a] = k
    off = depth[~np.eye(n, dtype=bool)] if n > 1 else np.empty(0, dtype=np.int64)
    summary = {
        "pairs": int(off.size),
        "max_off_diagonal": int(off.max()) if off.size else 0,
        "mean_off_diagonal": float(off.mean()) if off.size else 0.0,
        "saturated_pairs": int((off == R_max + 1).sum()),
        "histogram": np.bincount(off, minlength=R_max + 2).tolist() if off.size else [0] * (R_max + 2),
    }
    return PersistenceTable(w, int(R_max), depth, summary)


@dataclass
class PPQIResult:
    accepted: bool
    reason: str = ""
    isomorphism_onto_image: bool = False
    isometric_radius: float = 0.0

    def __bool__(self) -> bool:
        return self.accepted


def ppqi_check(g1: ColoredGraph, x1: int, g2: ColoredGraph, x2: int, R: int, lam: float,
               mapping: Mapping[int, int]) -> PPQIResult:
    """Is ``mapping`` a pointed, color-preserving, lam-bilipschitz map on D(x1, R)?

    Distances are hop distances in the host graphs.  For accepted maps with
    lam < 2 the map is re-checked to be a graph isomorphism between the
    induced subgraphs on its domain and image; integer distances force this,
    so a failure raises.  ``isometric_radius`` is R / lam.
    """
    if not 1 <= lam:
        raise GraphError("distortion must be at least 1")
    dom_ball = hop_ball(g1, x1, R)
    dom = dom_ball.members
    if set(int(k) for k in mapping) != set(dom.tolist()):
        raise GraphError("map domain must be exactly the closed R-ball at x1")
    img = np.array([int(mapping[int(v)]) for v in dom], dtype=np.int64)
    if mapping[int(x1)] != x2:
        return PPQIResult(False, "not pointed")
    if not np.array_equal(g1.colors[dom], g2.colors[img]):
        return PPQIResult(False, "colors not preserved")
    reach = int(np.ceil(lam * 2 * R)) + 1
    for a, u in enumerate(dom):
        d1 = g1.distances_from(u, 2 * R)[dom]
        d2 = g2.distances_from(img[a], reach)[img].astype(float)
        d2[d2 < 0] = np.inf
        if np.any(d2 > lam * d1) or np.any(d1 > lam * d2):
            b = int(np.flatnonzero((d2 > lam * d1) | (d1 > lam * d2))[0])
            return PPQIResult(False, f"bilipschitz bound fails on ({int(u)}, {int(dom[b])})")
    res = PPQIResult(True, "", False, R / lam)
    if lam < 2:
        res.isomorphism_onto_image = _iso_onto_image(g1, dom, g2, img)
        if not res.isomorphism_onto_image:
            raise AssertionError("accepted map with distortion < 2 is not an isomorphism onto its image")
    return res


def _iso_onto_image(g1: ColoredGraph, dom: np.ndarray, g2: ColoredGraph, img: np.ndarray) -> bool:
    if np.unique(img).size != img.size:
        return False
    for a in range(dom.size):
        for b in range(a + 1, dom.size):
            if g1.has_edge(int(dom[a]), int(dom[b])) != g2.has_edge(int(img[a]), int(img[b])):
                return False
    return True
