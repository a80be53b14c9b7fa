"""Finite metric spaces, penumbras, separated nets and perturbation bookkeeping.

Point identifiers are opaque hashable values.  Backends subclass
:class:`FiniteMetricSpace` and override the neighbourhood queries
(``within``, ``distances_to_set``) with something faster than a scan; the
generic routines below only talk to those two methods.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import kernels

DEFAULT_SLACK = 1e-9


class MetricError(ValueError):
    pass


class FiniteMetricSpace:
    """A finite set of point ids with a distance function."""

    def __init__(self, points: Iterable[Hashable], dist: Callable[[Hashable, Hashable], float]):
        self._points = tuple(points)
        self._dist = dist

    @property
    def points(self) -> tuple:
        return self._points

    def __len__(self) -> int:
        return len(self._points)

    def dist(self, x, y) -> float:
        return 0.0 if x == y else float(self._dist(x, y))

    def within(self, x, r: float, strict: bool = False) -> list:
        """Points at distance <= r (or < r when ``strict``) from ``x``."""
        if strict:
            return [y for y in self._points if self.dist(x, y) < r]
        return [y for y in self._points if self.dist(x, y) <= r]

    def distances_to_set(self, Q: Iterable, ambient: Sequence | None = None) -> np.ndarray:
        """d(Q, y) for each y in ``ambient`` (default: all points); +inf when Q is empty."""
        Q = list(Q)
        amb = self._points if ambient is None else ambient
        out = np.full(len(amb), math.inf)
        for k, y in enumerate(amb):
            for q in Q:
                d = self.dist(q, y)
                if d < out[k]:
                    out[k] = d
        return out


def euclidean_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise distances |a_k - b_k|, summed coordinate by coordinate.

    Every Euclidean comparison in the package goes through this summation
    order so that the numba and numpy paths agree to the last bit.
    """
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    s = np.zeros(max(a.shape[0], b.shape[0]))
    for k in range(a.shape[1]):
        d = a[:, k] - b[:, k]
        s += d * d
    return np.sqrt(s)


class EuclideanSpace(FiniteMetricSpace):
    """Rows of a coordinate array; point id = row index."""

    def __init__(self, coords):
        coords = np.ascontiguousarray(coords, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        self.coords = coords
        self._tree = None
        super().__init__(range(coords.shape[0]), self._euclid)

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    @property
    def tree(self) -> cKDTree:
        if self._tree is None:
            self._tree = cKDTree(self.coords)
        return self._tree

    def _euclid(self, x, y) -> float:
        return float(euclidean_rows(self.coords[x], self.coords[y])[0])

    def within(self, x, r: float, strict: bool = False) -> list:
        if r < 0:
            return []
        cand = np.asarray(self.tree.query_ball_point(self.coords[x], r * (1 + 1e-7) + 1e-12), dtype=np.int64)
        d = euclidean_rows(self.coords[cand], np.broadcast_to(self.coords[x], (cand.size, self.dim)))
        keep = d < r if strict else d <= r
        return sorted(int(v) for v in cand[keep])

    def distances_to_set(self, Q: Iterable, ambient: Sequence | None = None) -> np.ndarray:
        Q = np.fromiter(Q, dtype=np.int64)
        amb = np.arange(len(self)) if ambient is None else np.asarray(ambient, dtype=np.int64)
        if Q.size == 0:
            return np.full(amb.size, math.inf)
        _, idx = cKDTree(self.coords[Q]).query(self.coords[amb])
        return euclidean_rows(self.coords[amb], self.coords[Q[idx]])

    def conflict_pairs(self, ids: np.ndarray, K: float) -> np.ndarray:
        """Pairs of local positions (a < b) into ``ids`` with distance < K."""
        sub = self.coords[ids]
        pairs = cKDTree(sub).query_pairs(K * (1 + 1e-7), output_type="ndarray")
        if pairs.size == 0:
            return np.empty((0, 2), dtype=np.int64)
        d = euclidean_rows(sub[pairs[:, 0]], sub[pairs[:, 1]])
        return pairs[d < K].astype(np.int64)


@dataclass(frozen=True)
class NetCertificate:
    """A subset with a separation claim and a covering radius over its ambient set.

    ``separation`` is None when no separation is claimed.
    """

    subset: tuple
    separation: float | None
    covering_radius: float

    def to_json(self) -> str:
        return json.dumps({"subset": list(self.subset), "separation": self.separation,
                           "covering_radius": self.covering_radius}, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "NetCertificate":
        obj = json.loads(text)
        return cls(tuple(obj["subset"]), obj["separation"], obj["covering_radius"])


@dataclass(frozen=True)
class Perturbation:
    """A bijection between point ids moving nothing farther than ``epsilon``."""

    pairing: Mapping
    epsilon: float
    meta: dict = field(default_factory=dict, compare=False)

    def image(self, ids: Iterable) -> list:
        return [self.pairing[x] for x in ids]


def closed_penumbra(space: FiniteMetricSpace, Q: Iterable, r: float) -> frozenset:
    """{y : d(Q, y) <= r}; empty when Q is empty (d(empty, y) = +inf)."""
    if r < 0:
        raise MetricError("penumbra radius must be non-negative")
    out: set = set()
    for q in Q:
        out.update(space.within(q, r))
    return frozenset(out)


def separation_violations(space: FiniteMetricSpace, Q: Iterable, K: float,
                          tolerant: bool = False, slack: float = DEFAULT_SLACK) -> list:
    """Unordered pairs of distinct Q points closer than K (K - slack when tolerant)."""
    Q = list(Q)
    members = set(Q)
    bound = K - slack if tolerant else K
    bad = []
    for q in Q:
        for y in space.within(q, bound, strict=True):
            if y != q and y in members and (y, q) not in bad:
                bad.append((q, y))
    return bad


def is_k_separated(space: FiniteMetricSpace, Q: Iterable, K: float,
                   tolerant: bool = False, slack: float = DEFAULT_SLACK) -> bool:
    if K <= 0:
        raise MetricError("separation constant must be positive")
    return not separation_violations(space, Q, K, tolerant, slack)


def covering_radius(space: FiniteMetricSpace, Q: Iterable, ambient: Sequence | None = None) -> float:
    """max over ambient points of the distance to Q."""
    Q = list(Q)
    if not Q:
        raise MetricError("covering radius of the empty set is infinite")
    d = space.distances_to_set(Q, ambient)
    return float(d.max()) if d.size else 0.0


def greedy_maximal_net(space: FiniteMetricSpace, K: float, required: Iterable = (),
                       candidates: Sequence | None = None) -> NetCertificate:
    """Maximal K-separated subset of ``candidates`` containing ``required``.

    Candidates are scanned in the given order (default: the space's point
    order) and kept when no kept point lies at distance < K.  The returned
    covering radius is measured over the candidates and is below K by
    maximality.
    """
    if K <= 0:
        raise MetricError("separation constant must be positive")
    required = list(dict.fromkeys(required))
    cands = list(space.points if candidates is None else candidates)
    cset = set(cands)
    missing = [x for x in required if x not in cset]
    if missing:
        raise MetricError(f"required points not among candidates: {missing[:5]}")
    bad = separation_violations(space, required, K)
    if bad:
        raise MetricError(f"required set is not {K}-separated, e.g. {bad[0]}")
    if not cands:
        return NetCertificate((), K, 0.0)
    req = set(required)
    order = required + [c for c in dict.fromkeys(cands) if c not in req]
    if isinstance(space, EuclideanSpace):
        chosen = _greedy_euclidean(space, np.asarray(order, dtype=np.int64), len(required), K)
    else:
        blocked: set = set()
        chosen = []
        for k, c in enumerate(order):
            if k >= len(required) and c in blocked:
                continue
            chosen.append(c)
            blocked.update(space.within(c, K, strict=True))
    subset = tuple(sorted(chosen))
    return NetCertificate(subset, K, covering_radius(space, subset, cands))


def _greedy_euclidean(space: EuclideanSpace, order: np.ndarray, n_required: int, K: float) -> list:
    pairs = space.conflict_pairs(order, K)
    m = order.size
    both = np.concatenate([pairs, pairs[:, ::-1]]) if pairs.size else np.empty((0, 2), np.int64)
    both = both[np.lexsort((both[:, 1], both[:, 0]))]
    indptr = np.zeros(m + 1, dtype=np.int64)
    np.add.at(indptr, both[:, 0] + 1, 1)
    indptr = np.cumsum(indptr)
    local = np.arange(m, dtype=np.int64)
    chosen = kernels.greedy_conflict_net(local, indptr, np.ascontiguousarray(both[:, 1]), n_required)
    return [int(v) for v in order[chosen]]


def apply_perturbation(space: FiniteMetricSpace, Q: NetCertificate, pert: Perturbation,
                       slack: float = DEFAULT_SLACK) -> NetCertificate:
    """Certificates for the image of a perturbed net.

    The image of a tau-separated, eta-dense set under an eps-perturbation is
    (eta + eps)-dense, and (tau - 2 eps)-separated when tau > 2 eps.  The
    pairing must be a bijection defined exactly on Q.subset and must move no
    point farther than eps.
    """
    dom = set(Q.subset)
    if set(pert.pairing) != dom:
        raise MetricError("perturbation pairing must be defined exactly on the net")
    img = [pert.pairing[x] for x in Q.subset]
    if len(set(img)) != len(img):
        raise MetricError("perturbation pairing is not injective")
    eps = pert.epsilon
    if eps < 0:
        raise MetricError("perturbation bound must be non-negative")
    for x in Q.subset:
        if space.dist(x, pert.pairing[x]) > eps + slack:
            raise MetricError(f"point {x!r} moves farther than {eps}")
    tau = Q.separation
    sep = tau - 2 * eps if tau is not None and tau > 2 * eps else None
    return NetCertificate(tuple(img), sep, Q.covering_radius + eps)
