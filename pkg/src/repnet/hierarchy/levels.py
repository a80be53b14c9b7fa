"""Levels X^j_i of the hierarchical construction on a colored graph.

Every level stores, for each of its points z, an isomorphism h^j_{i,z} from
the base ball D(p, r_i) onto D(z, r_i) as an image array aligned with the
sorted members of D(p, r_i).  Levels are built in induction order: for
j = 1, 2, ... and then i = j-1 down to 0.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

import numpy as np

from .. import kernels
from ..graph_space.balls import PointedBall, hop_ball
from ..graph_space.graph import ColoredGraph
from ..graph_space.isomorphism import check_ball_isomorphism
from ..graph_space.patterns import OmegaOracle
from .schedule import Schedule


class HierarchyError(ValueError):
    pass


@dataclass(eq=False)
class HierarchyLevel:
    i: int
    j: int
    hatX: np.ndarray
    tildeX: np.ndarray
    maps: dict
    factors: dict
    poset: list
    relation: list
    maximal: list
    region_radius: int

    @property
    def X(self) -> np.ndarray:
        return np.union1d(self.hatX, self.tildeX)

    def contains(self, x: int) -> bool:
        return int(x) in self.maps


class Hierarchy:
    """Construction state: graph, base point, schedule, Omega oracles, base maps and levels.

    ``omega_data`` may narrow Omega_i to a caller-chosen vertex set per
    level; ``prescribed`` may fix the base map f_{i,x} for x in Omega_i,
    either as a mapping x -> image array or a callable, per level.
    """

    def __init__(self, graph: ColoredGraph, p: int, schedule: Schedule,
                 omega_data: Mapping[int, Iterable[int]] | None = None,
                 prescribed: Mapping[int, Mapping | Callable] | None = None):
        self.graph = graph
        self.p = int(p)
        self.schedule = schedule
        self.omega_data = dict(omega_data or {})
        self.prescribed = dict(prescribed or {})
        self.levels: dict[tuple[int, int], HierarchyLevel] = {}
        self.refused: list[dict] = []
        self._domains: dict[int, PointedBall] = {}
        self._oracles: dict[int, OmegaOracle] = {}
        self._base: dict[tuple[int, int], np.ndarray] = {}
        self._window_radius: int | None = None

    # -- shared data -------------------------------------------------------
    @property
    def window_radius(self) -> int:
        if self._window_radius is None:
            self._window_radius = self.graph.window_radius(self.p)
        return self._window_radius

    def domain(self, i: int) -> PointedBall:
        if i not in self._domains:
            self._domains[i] = hop_ball(self.graph, self.p, self.schedule.r[i])
        return self._domains[i]

    def oracle(self, i: int) -> OmegaOracle:
        if i not in self._oracles:
            self._oracles[i] = OmegaOracle(self.graph, self.p, self.schedule.r[i], self.omega_data.get(i))
        return self._oracles[i]

    def base_map(self, i: int, x: int) -> np.ndarray:
        """f_{i,x}: the prescribed map if any, else the lexicographically smallest witness."""
        key = (i, int(x))
        if key in self._base:
            return self._base[key]
        pres = self.prescribed.get(i)
        img = None
        if pres is not None:
            img = pres(int(x)) if callable(pres) else pres.get(int(x))
        if img is not None:
            img = np.asarray(img, dtype=np.int64)
            why = check_ball_isomorphism(self.domain(i), hop_ball(self.graph, x, self.schedule.r[i]), img)
            if why:
                raise HierarchyError(f"prescribed map f_({i},{x}) is not an isomorphism: {why}")
        else:
            img = self.oracle(i).witness(x)
            if img is None:
                raise HierarchyError(f"vertex {x} is not in Omega_{i}")
        self._base[key] = img
        return img

    def level_set(self, k: int, l: int) -> np.ndarray:
        if k == l:
            return np.array([self.p], dtype=np.int64)
        return self.levels[(k, l)].X

    def level_map(self, k: int, l: int, z: int) -> np.ndarray:
        if k == l:
            if z != self.p:
                raise KeyError(z)
            return self.domain(k).members
        return self.levels[(k, l)].maps[int(z)]

    def level_factors(self, k: int, l: int, z: int) -> tuple:
        return () if k == l else self.levels[(k, l)].factors[int(z)]

    def compose(self, outer: np.ndarray, outer_level: int, inner: np.ndarray) -> np.ndarray:
        """outer o inner, for ``outer`` defined on D(p, r_outer_level) and ``inner`` landing inside it."""
        return outer[self.domain(outer_level).local(inner)]

    def evaluate_factors(self, i: int, chain: tuple) -> np.ndarray:
        """f_{a_1} o ... o f_{a_m} applied to D(p, r_i), with f the base maps."""
        v = self.domain(i).members
        for (k, y) in reversed(chain):
            v = self.base_map(k, y)[self.domain(k).local(v)]
        return v

    # -- construction ------------------------------------------------------
    def fits(self, j: int) -> bool:
        return j < self.schedule.depth and self.schedule.r[j] <= self.window_radius

    def build_level(self, i: int, j: int) -> HierarchyLevel:
        return build_level(self, i, j)

    def build(self, depth: int | None = None) -> list[tuple[int, int]]:
        """Build every level (i, j) with j < depth that fits the window; refuse the rest."""
        depth = self.schedule.depth if depth is None else depth
        built = []
        for j in range(1, depth):
            if not self.fits(j):
                for i in range(j - 1, -1, -1):
                    self.refused.append({"level": [i, j], "reason":
                                         f"r_{j}={self.schedule.r[j] if j < self.schedule.depth else None} "
                                         f"exceeds window radius {self.window_radius} at p"})
                continue
            for i in range(j - 1, -1, -1):
                self.build_level(i, j)
                built.append((i, j))
        return built


def _poset(h: Hierarchy, i: int, j: int) -> tuple[list, list, list]:
    elems = [(l, int(z)) for l in range(i + 1, j) for z in h.levels[(l, j)].X]
    members = set(elems)
    rel = []
    for (l2, z2) in elems:
        H = h.levels[(l2, j)].maps[z2]
        for l in range(i + 1, l2):
            for z in h.compose(H, l2, h.level_set(l, l2)):
                if (l, int(z)) in members:
                    rel.append(((l, int(z)), (l2, z2)))
    lower = {a for a, _ in rel}
    maximal = [e for e in elems if e not in lower]
    return elems, rel, maximal


def build_level(h: Hierarchy, i: int, j: int) -> HierarchyLevel:
    """Construct X^j_i = hatX (fresh greedy points) + tildeX (images through maximal elements)."""
    sch, g, p = h.schedule, h.graph, h.p
    if not 0 <= i < j:
        raise HierarchyError("need 0 <= i < j")
    if not h.fits(j):
        raise HierarchyError(f"level ({i},{j}) refused: r_{j} exceeds the window radius "
                             f"{h.window_radius} at the base point")
    need = [(k, l) for l in range(1, j) for k in range(l)] + [(k, j) for k in range(i + 1, j)]
    missing = [kl for kl in need if kl not in h.levels]
    if missing:
        raise HierarchyError(f"level ({i},{j}) needs levels {missing} first")
    r, s_i, t_i = sch.r, sch.s[i], sch.t[i]

    elems, rel, maximal = _poset(h, i, j)
    rs = set(rel)
    if any(a == b or (b, a) in rs for a, b in rel):
        raise HierarchyError(f"level ({i},{j}): poset relation is not antisymmetric; check the schedule")
    maps: dict[int, np.ndarray] = {}
    factors: dict[int, tuple] = {}
    for (l, z) in maximal:
        H = h.levels[(l, j)].maps[z]
        Hf = h.levels[(l, j)].factors[z]
        for xp in h.level_set(i, l):
            inner = h.level_map(i, l, int(xp))
            x = int(H[h.domain(l).local([xp])[0]])
            if x in maps:
                raise HierarchyError(f"vertex {x} reached from two maximal elements")
            maps[x] = h.compose(H, l, inner)
            factors[x] = tuple(Hf) + tuple(h.level_factors(i, l, int(xp)))
    tilde = np.array(sorted(maps), dtype=np.int64)

    n = g.n
    region_r = r[j] - t_i
    region, _ = g.bfs(p, region_r)
    allowed = np.zeros(n, dtype=bool)
    allowed[region] = True
    by_level: dict[int, list] = {}
    for (l, z) in maximal:
        by_level.setdefault(l, []).append(z)
    for l, zs in by_level.items():
        ex, _ = g.bfs(np.array(zs, dtype=np.int64), r[l] + s_i)
        allowed[ex] = False
    if i in h.omega_data:
        keep = np.zeros(n, dtype=bool)
        keep[np.fromiter(h.omega_data[i], dtype=np.int64)] = True
        allowed &= keep

    orc = h.oracle(i)
    blocked = np.zeros(n, dtype=bool)
    hat: list[int] = []

    def take(v):
        hat.append(int(v))
        near, _ = g.bfs(int(v), s_i - 1)
        blocked[near] = True

    if j == i + 1:
        take(p)
        maps[p] = h.domain(i).members
        factors[p] = ()
    order = region
    k = 0
    while True:
        k = kernels.next_free(order, k, blocked, allowed)
        if k >= order.size:
            break
        v = int(order[k])
        if orc.witness(v) is None:
            allowed[v] = False
            continue
        take(v)
        maps[v] = h.base_map(i, v)
        factors[v] = ((i, v),)
    hatX = np.array(sorted(hat), dtype=np.int64)
    if np.intersect1d(hatX, tilde).size:
        raise HierarchyError(f"level ({i},{j}): fresh and propagated points overlap")
    lvl = HierarchyLevel(i, j, hatX, tilde, maps, factors, elems, rel, maximal, int(region_r))
    h.levels[(i, j)] = lvl
    return lvl
