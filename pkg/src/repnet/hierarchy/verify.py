"""Independent checks of built levels, their limits and the density bound.

Nothing here trusts bookkeeping produced during construction beyond the
stored point sets and maps: regions, poset relations, separations and
composed maps are all recomputed from the graph.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .._accel import workers
from ..graph_space.balls import hop_ball
from ..graph_space.graph import HopMetricSpace
from ..graph_space.isomorphism import check_ball_isomorphism
from ..metric_core import is_k_separated
from .levels import Hierarchy, HierarchyError, HierarchyLevel, _poset

_MAX_EXAMPLES = 5


class _Clause:
    def __init__(self):
        self.bad: list = []
        self.info: dict = {}

    def fail(self, example):
        if len(self.bad) < _MAX_EXAMPLES:
            self.bad.append(example)
        self.info["violations"] = self.info.get("violations", 0) + 1

    def as_dict(self) -> dict:
        return {"ok": not self.bad, "counterexamples": self.bad, **self.info}


def _within(g, centers, radius) -> np.ndarray:
    mask = np.zeros(g.n, dtype=bool)
    if radius >= 0 and len(centers):
        v, _ = g.bfs(np.asarray(centers, dtype=np.int64), radius)
        mask[v] = True
    return mask


def _scan(fn, items):
    """Map ``fn`` over ``items`` in order, on REPNET_WORKERS threads when more than one."""
    n = workers()
    if n <= 1 or len(items) < 64:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(n) as pool:
        return list(pool.map(fn, items, chunksize=64))


def verify_level(level: HierarchyLevel, h: Hierarchy) -> dict:
    """Check every clause of the level invariant; each entry carries counterexamples."""
    g, sch, p = h.graph, h.schedule, h.p
    i, j = level.i, level.j
    r, s_i, t_i = sch.r, sch.s[i], sch.t[i]
    hat, tilde = level.hatX, level.tildeX
    X = level.X
    out: dict[str, _Clause] = {k: _Clause() for k in
                               ("maps", "poset", "disjoint", "i", "ii", "iii", "iv", "v", "vi", "vii",
                                "uniqueness", "composition")}

    # stored maps are isomorphisms D(p, r_i) -> D(x, r_i)
    dom = h.domain(i)
    if set(level.maps) != set(X.tolist()):
        out["maps"].fail({"reason": "map keys differ from the point set"})
    def map_problem(x):
        return check_ball_isomorphism(dom, hop_ball(g, int(x), r[i]), level.maps.get(int(x), np.empty(0)))

    for x, why in zip(X, _scan(map_problem, X)):
        if why:
            out["maps"].fail({"x": int(x), "reason": why})

    # poset recomputed from scratch; strict order by level, so check transitivity and maximality
    elems, rel, maximal = _poset(h, i, j)
    if sorted(elems) != sorted(level.poset) or sorted(rel) != sorted(level.relation) \
            or sorted(maximal) != sorted(level.maximal):
        out["poset"].fail({"reason": "stored poset differs from the recomputed one"})
    rel_set = set(rel)
    for a, b in rel:
        if a == b or (b, a) in rel_set:
            out["poset"].fail({"reason": "not antisymmetric", "pair": [list(a), list(b)]})
    above: dict = {}
    for a, b in rel:
        above.setdefault(a, set()).add(b)
    for a, bs in above.items():
        for b in bs:
            for c in above.get(b, ()):
                if (a, c) not in rel_set:
                    out["poset"].fail({"reason": "not transitive", "chain": [a, b, c]})
    max_set = set(maximal)
    for e in elems:
        ups = [m for m in above.get(e, ()) if m in max_set] + ([e] if e in max_set else [])
        if len(ups) != 1:
            out["uniqueness"].fail({"element": list(e), "maximal_above": [list(m) for m in ups]})
    cover = np.zeros(g.n, dtype=np.int32)
    for (l, z) in maximal:
        cover[level_image(h, l, j, z)] += 1
    for (l, z) in elems:
        c = cover[level_image(h, l, j, z)]
        if np.any(c != 1):
            out["uniqueness"].fail({"element": [l, z], "cover_counts": sorted(set(c.tolist()))})

    if np.intersect1d(hat, tilde).size:
        out["disjoint"].fail({"common": np.intersect1d(hat, tilde)[:5].tolist()})

    # (i) hatX is a maximal s_i-separated subset of Omega_i in the region
    region = _within(g, [p], r[j] - t_i)
    allowed = region.copy()
    for (l, z) in maximal:
        allowed &= ~_within(g, [z], r[l] + s_i)
    orc = h.oracle(i)
    for x in hat:
        if not allowed[x]:
            out["i"].fail({"x": int(x), "reason": "outside the region or inside an excluded disk"})
        elif orc.witness(int(x)) is None:
            out["i"].fail({"x": int(x), "reason": "not in Omega_i"})
    for x in hat:
        near, d = g.bfs(int(x), s_i - 1)
        clash = np.intersect1d(near, hat)
        clash = clash[clash != x]
        if clash.size:
            out["i"].fail({"x": int(x), "y": int(clash[0]), "reason": "closer than s_i"})
    free = allowed & ~_within(g, hat, s_i - 1)
    for v in np.flatnonzero(free):
        if orc.witness(int(v)) is not None:
            out["i"].fail({"x": int(v), "reason": "could be added: hatX not maximal"})

    # (ii) X is s_i-separated, inside the region and in Omega_i
    if not is_k_separated(HopMetricSpace(g), X.tolist(), s_i):
        out["ii"].fail({"reason": "metric check: X is not s_i-separated"})
    if not region[X].all():
        out["ii"].fail({"x": int(X[~region[X]][0]), "reason": "outside D(p, r_j - t_i)"})
    for x in X:
        if orc.witness(int(x)) is None:
            out["ii"].fail({"x": int(x), "reason": "not in Omega_i"})

    # (iii)-(v) against every poset element
    in_X = np.zeros(g.n, dtype=bool)
    in_X[X] = True
    manifold_extra = 0
    for (l, z) in elems:
        H = h.levels[(l, j)].maps[z]
        dl = h.domain(l)
        img_set = H[dl.local(h.level_set(i, l))]
        img_mask = np.zeros(g.n, dtype=bool)
        img_mask[img_set] = True
        ball = np.zeros(g.n, dtype=bool)
        ball[H] = True
        here = np.flatnonzero(in_X & ball)
        if not np.array_equal(here, np.sort(img_set)):
            out["iv"].fail({"element": [l, z], "X_in_ball": here.size, "image": int(img_set.size)})
        inv = dict(zip(H.tolist(), dl.members.tolist()))
        lower = set(h.level_set(i, l).tolist())
        for x in here:
            xp = inv[int(x)]
            if xp not in lower:
                out["iii"].fail({"element": [l, z], "x": int(x), "reason": "preimage not in X^l_i"})
                continue
            want = h.compose(H, l, h.level_map(i, l, xp))
            if not np.array_equal(level.maps[int(x)], want):
                out["iii"].fail({"element": [l, z], "x": int(x)})
        near_v, near_d = g.bfs(z, r[l] + s_i - 1)
        close = near_v[in_X[near_v] & ~img_mask[near_v]]
        for x in close[:_MAX_EXAMPLES]:
            out["v"].fail({"element": [l, z], "x": int(x)})
        if close.size > _MAX_EXAMPLES:
            out["v"].info["violations"] += close.size - _MAX_EXAMPLES
        # stricter threshold lambda_l * Lambda_{l, j-1} * (r_l + s_i), reported only
        thr = sch.lam[l] * sch.Lambda(l, j - 1) * (r[l] + s_i)
        wide_v, wide_d = g.bfs(z, int(np.ceil(thr)))
        manifold_extra += int(np.count_nonzero(in_X[wide_v] & ~img_mask[wide_v] & (wide_d < thr)))
    out["v"].info["graph_threshold"] = "r_l + s_i"
    out["v"].info["pairs_inside_distortion_threshold"] = manifold_extra

    # (vi) nesting and restriction for earlier levels
    Xset = set(X.tolist())
    dom_i = h.domain(i).members
    for (k, l) in sorted(h.levels) + [(m, m) for m in range(i + 1, j + 1)]:
        if not (k <= l and ((l < j and k >= i) or (l == j and k > i))):
            continue
        if (k, l) == (i, j):
            continue
        for z in h.level_set(k, l):
            if int(z) not in Xset:
                out["vi"].fail({"level": [k, l], "z": int(z), "reason": "not in X^j_i"})
                continue
            big = h.level_map(k, l, int(z))
            want = big[h.domain(k).local(dom_i)]
            if not np.array_equal(level.maps[int(z)], want):
                out["vi"].fail({"level": [k, l], "z": int(z), "reason": "map is not the restriction"})

    # (vii)
    if p not in Xset:
        out["vii"].fail({"reason": "base point missing"})
    elif not np.array_equal(level.maps[p], dom_i):
        out["vii"].fail({"reason": "map at the base point is not the identity"})

    # every map is the composition of its recorded base-map factors
    for x in X:
        chain = level.factors.get(int(x))
        if chain is None:
            out["composition"].fail({"x": int(x), "reason": "no factor chain"})
        elif not np.array_equal(h.evaluate_factors(i, chain), level.maps[int(x)]):
            out["composition"].fail({"x": int(x), "chain": [list(c) for c in chain]})

    clauses = {k: v.as_dict() for k, v in out.items()}
    return {"level": [i, j], "ok": all(c["ok"] for c in clauses.values()),
            "sizes": {"hatX": int(hat.size), "tildeX": int(tilde.size), "poset": len(elems),
                      "maximal": len(maximal)},
            "clauses": clauses}


def level_image(h: Hierarchy, l: int, j: int, z: int) -> np.ndarray:
    """Vertices of D(z, r_l), read off the stored map h^j_{l,z}."""
    return h.levels[(l, j)].maps[int(z)]


@dataclass
class LimitLevel:
    i: int
    X: np.ndarray
    maps: dict
    sources: dict
    checks: dict = field(default_factory=dict)


def limit_levels(h: Hierarchy, i: int) -> LimitLevel:
    """X_i as the union of the built X^j_i, checked for coherence and nesting.

    Raises HierarchyError when two levels disagree on a map, when some
    X_k (k > i) is not contained in X_i, or when h_{i,x} is not the
    restriction of h_{k,x} to D(p, r_i).
    """
    def union(k):
        maps = {h.p: h.domain(k).members}
        src = {h.p: k}
        for (a, b), lvl in sorted(h.levels.items()):
            if a != k:
                continue
            for x, m in lvl.maps.items():
                if x in maps and not np.array_equal(maps[x], m):
                    raise HierarchyError(f"levels disagree on h_({k},{x})")
                if x not in maps:
                    maps[x], src[x] = m, b
        return maps, src

    maps, src = union(i)
    checks = {"coherent": True, "nested_in": [], "restriction_coherent": True}
    dom_i = h.domain(i).members
    top = max([b for (_, b) in h.levels] + [i])
    for k in range(i + 1, top + 1):
        mk, _ = union(k)
        missing = set(mk) - set(maps)
        if missing:
            raise HierarchyError(f"X_{k} is not contained in X_{i}: e.g. {min(missing)}")
        dk = h.domain(k)
        for x, m in mk.items():
            if not np.array_equal(maps[x], m[dk.local(dom_i)]):
                raise HierarchyError(f"h_({i},{x}) is not the restriction of h_({k},{x})")
        checks["nested_in"].append(k)
    X = np.array(sorted(maps), dtype=np.int64)
    return LimitLevel(i, X, maps, src, checks)


def density_bound(sch, i: int) -> float:
    """Assembled covering-radius bound for X_i."""
    lam, l0 = sch.lam[i], sch.lambda0
    r, s, t, w = sch.r[i], sch.s[i], sch.t[i], sch.omega[i]
    a = 4 * r * (lam ** 5 - 1) / lam ** 2 + l0 ** 3 * s + t + 2 * w
    b = 4 * r * (lam ** 6 - 1) / lam ** 2 + l0 ** 2 * s + t + (1 + l0) * w
    return max(a, b) + lam ** 2 * (w + s)


def density_report(h: Hierarchy, limit: LimitLevel) -> dict:
    """Measured covering radius of X_i on D(p, r_J - t_i - omega_i) against the bound."""
    sch, g, i = h.schedule, h.graph, limit.i
    js = [b for (a, b) in h.levels if a == i]
    if not js:
        raise HierarchyError(f"no level X^j_{i} has been built")
    J = max(js)
    w = sch.omega[i]
    radius = int(np.floor(sch.r[J] - sch.t[i] - w))
    d = g.distances_from(limit.X)

    def measure(rad):
        win, _ = g.bfs(h.p, rad)
        dd = d[win]
        return float("inf") if np.any(dd < 0) else float(dd.max())

    if radius < 0 or not np.any(g.distances_from(h.p, radius)[limit.X] >= 0):
        raise HierarchyError(f"X_{i} has no point in the window D(p, {radius})")
    measured = measure(radius)
    inner = measure(int(radius * 3 // 4))
    bound = density_bound(sch, i)
    local = w + sch.s[i]
    return {"i": i, "J": J, "window_radius": radius, "points": int(limit.X.size),
            "measured": measured, "measured_inner_window": inner,
            "bound": bound, "ok": bool(np.isfinite(measured) and measured <= bound),
            "local_bound": local, "local_ok": bool(measured <= local)}


def level_coloring(h: Hierarchy, limits: dict) -> np.ndarray:
    """1 + the largest i with v in X_i, and 0 for vertices in no limit level."""
    col = np.zeros(h.graph.n, dtype=np.int64)
    for i in sorted(limits):
        col[limits[i].X] = i + 1
    return col


def hierarchy_report(h: Hierarchy, include_maps: bool = False) -> dict:
    levels = []
    for (i, j), lvl in sorted(h.levels.items()):
        entry = {"i": i, "j": j, "hatX": lvl.hatX.tolist(), "tildeX": lvl.tildeX.tolist(),
                 "maximal": [list(m) for m in lvl.maximal],
                 "relation": [[*a, *b] for a, b in lvl.relation],
                 "region_radius": lvl.region_radius}
        if include_maps:
            entry["maps"] = {str(x): m.tolist() for x, m in sorted(lvl.maps.items())}
            entry["factors"] = {str(x): [list(f) for f in c] for x, c in sorted(lvl.factors.items())}
        levels.append(entry)
    return {"base_point": h.p, "window_radius": int(h.window_radius),
            "schedule": h.schedule.to_dict(), "levels": levels, "refused": h.refused}
