"""Delone sets in Euclidean boxes, packing constants, the corona-gap
perturbation and extraction of the bounded-degree colored graph.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np
from scipy.spatial import cKDTree

from . import kernels
from .graph_space.graph import ColoredGraph
from .metric_core import (DEFAULT_SLACK, EuclideanSpace, NetCertificate, Perturbation, apply_perturbation,
                          euclidean_rows, greedy_maximal_net)


class DeloneError(ValueError):
    pass


class GapSearchExhausted(DeloneError):
    """The corona-gap candidate search found no admissible position for a point."""

    def __init__(self, point: int, rings: int):
        super().__init__(f"no admissible position found for point {point} within {rings} search rings")
        self.point = point


@dataclass(frozen=True)
class EuclideanBox:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi) or not lo:
            raise DeloneError("box corners must have the same positive dimension")
        if any(not a < b for a, b in zip(lo, hi)):
            raise DeloneError("degenerate box: need lo < hi in every coordinate")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def parse(cls, text: str, dim: int) -> "EuclideanBox":
        """``"lo_1,...,lo_d,hi_1,...,hi_d"``"""
        vals = [float(v) for v in text.split(",")]
        if len(vals) != 2 * dim:
            raise DeloneError(f"box needs {2 * dim} numbers for dimension {dim}")
        return cls(tuple(vals[:dim]), tuple(vals[dim:]))

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def sides(self) -> np.ndarray:
        return np.array(self.hi) - np.array(self.lo)

    def boundary_distance(self, pts: np.ndarray) -> np.ndarray:
        """Distance to the box boundary (negative outside the box)."""
        pts = np.atleast_2d(pts)
        return np.minimum(pts - np.array(self.lo), np.array(self.hi) - pts).min(axis=1)


@dataclass(frozen=True, eq=False)
class PointCloud:
    coords: np.ndarray
    separation: float | None = None
    covering_radius: float | None = None

    @property
    def n(self) -> int:
        return int(self.coords.shape[0])

    @property
    def dim(self) -> int:
        return int(self.coords.shape[1])


@dataclass(frozen=True, eq=False)
class DeloneSet:
    """A tau-separated set whose window points lie within eta of it."""

    cloud: PointCloud
    tau: float
    eta: float
    window: EuclideanBox

    @property
    def points(self) -> np.ndarray:
        return self.cloud.coords

    @property
    def n(self) -> int:
        return self.cloud.n

    def space(self) -> EuclideanSpace:
        return EuclideanSpace(self.points)

    def certificate(self) -> NetCertificate:
        return NetCertificate(tuple(range(self.n)), self.tau, self.eta)

    def with_eta(self, eta: float) -> "DeloneSet":
        return DeloneSet(PointCloud(self.points, self.tau, eta), self.tau, eta, self.window)


def packing_bound(dim: int, tau: float, delta: float) -> int:
    """floor(((2 delta + tau) / tau)**dim): at most this many tau-separated points fit in a delta-ball.

    The ratio is evaluated exactly on the decimal literals of the inputs and
    never below the floating-point value, so rounding only errs upward.
    """
    if tau <= 0 or delta <= 0 or dim < 1:
        raise DeloneError("packing bound needs dim >= 1 and positive tau, delta")
    t, d = Fraction(repr(float(tau))), Fraction(repr(float(delta)))
    exact = math.floor(((2 * d + t) / t) ** dim)
    approx = math.floor(((2 * delta + tau) / tau) ** dim)
    return int(max(exact, approx))


def ball_volume(dim: int, r: float = 1.0) -> float:
    return math.pi ** (dim / 2) / math.gamma(dim / 2 + 1) * r ** dim


def annulus_volume(dim: int, sigma: float, rho: float) -> float:
    """vol{sigma - rho < |x| < sigma + rho}, expanded to avoid cancellation for small rho."""
    odd = sum(math.comb(dim, k) * sigma ** (dim - k) * rho ** k for k in range(1, dim + 1, 2))
    return ball_volume(dim) * 2 * odd


@dataclass(frozen=True)
class CoronaBudget:
    C: int
    K: float
    L: float
    P_epsilon: float
    P0: float

    def __iter__(self):
        return iter((self.C, self.K, self.L, self.P_epsilon))


def corona_volume_budget(dim: int, tau: float, sigma: float, epsilon: float,
                         P0: float | None = None) -> CoronaBudget:
    """Volume budget certifying that ``epsilon``-moves can clear a corona of half-width < P_epsilon.

    C counts the (tau - 2 epsilon)-separated points that can sit within
    sigma + P0 + tau/2 of a point, K is the volume of an epsilon-ball and
    L = K / (2C).  P_epsilon is the largest rho <= P0 whose annulus
    sigma +- rho has volume <= L, found by bisection.
    """
    if not 0 < epsilon < tau / 2:
        raise DeloneError("need 0 < epsilon < tau/2")
    if sigma <= 0:
        raise DeloneError("sigma must be positive")
    P0 = min(epsilon, sigma / 2) if P0 is None else float(P0)
    C = packing_bound(dim, tau - 2 * epsilon, sigma + P0 + tau / 2)
    K = ball_volume(dim, epsilon)
    L = K / (2 * C)
    if annulus_volume(dim, sigma, P0) <= L:
        P = P0
    else:
        lo, hi = 0.0, P0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if annulus_volume(dim, sigma, mid) <= L:
                lo = mid
            else:
                hi = mid
        P = lo
    if not P > 0:
        raise DeloneError(f"no positive corona half-width fits the budget (C={C}, K={K}, L={L})")
    return CoronaBudget(C, K, L, P, P0)


@dataclass(frozen=True)
class CoronaGapParams:
    sigma: float
    rho: float
    epsilon: float
    P_epsilon: float

    def __post_init__(self):
        if not 0 < self.rho < self.P_epsilon < self.sigma:
            raise DeloneError("need 0 < rho < P_epsilon < sigma")
        if not self.epsilon > 0:
            raise DeloneError("epsilon must be positive")

    @classmethod
    def from_budget(cls, dim: int, tau: float, sigma: float, epsilon: float,
                    rho: float | None = None) -> "CoronaGapParams":
        """Parameters with P_epsilon from :func:`corona_volume_budget`; rho defaults to half of it."""
        P = corona_volume_budget(dim, tau, sigma, epsilon).P_epsilon
        return cls(sigma, P / 2 if rho is None else rho, epsilon, P)


def candidate_lattice(box: EuclideanBox, max_pitch: float) -> tuple[np.ndarray, np.ndarray]:
    """Grid over the closed box whose per-axis pitch divides the side and is <= max_pitch.

    Rows are in lexicographic coordinate order.
    """
    counts = np.ceil(box.sides / max_pitch - 1e-9).astype(int)
    axes = [np.linspace(a, b, c + 1) for a, b, c in zip(box.lo, box.hi, counts)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh]), box.sides / counts


def generate_delone(box: EuclideanBox, tau: float, seed: int | None = None,
                    pitch: float | None = None) -> DeloneSet:
    """Greedy maximal tau-separated subset of a candidate lattice of pitch <= tau/4.

    ``seed=None`` scans candidates in ascending lexicographic order; an
    integer seed scans them in a permutation drawn from numpy's PCG64.
    The recorded eta = tau + half the lattice-cell diagonal is a proven
    covering radius for the whole box.
    """
    if tau <= 0:
        raise DeloneError("tau must be positive")
    if np.any(box.sides < 2 * tau):
        raise DeloneError("box side must be at least 2*tau")
    cand, steps = candidate_lattice(box, tau / 4 if pitch is None else min(pitch, tau / 4))
    order = np.arange(cand.shape[0])
    if seed is not None:
        order = np.random.default_rng(seed).permutation(order)
    cert = greedy_maximal_net(EuclideanSpace(cand), tau, (), order.tolist())
    pts = cand[np.array(cert.subset, dtype=np.int64)]
    eta = tau + 0.5 * float(np.sqrt((steps ** 2).sum()))
    return DeloneSet(PointCloud(pts, tau, eta), tau, eta, box)


def measure_covering_radius(points: np.ndarray, box: EuclideanBox, probe: float | None = None,
                            margin: float = 0.0) -> float:
    """Rigorous upper bound on sup over the eroded box of the distance to ``points``.

    Nearest-point distances are evaluated on a probe grid; every box point is
    within half a probe-cell diagonal of a probe, which is added on.
    """
    lo = np.array(box.lo) + margin
    hi = np.array(box.hi) - margin
    if np.any(lo > hi):
        raise DeloneError("margin erodes the whole box")
    sub = EuclideanBox(tuple(lo), tuple(np.maximum(hi, lo + 1e-12)))
    tree = cKDTree(points)
    if probe is None:
        nn = tree.query(points, k=2)[0][:, 1] if len(points) > 1 else np.array([np.min(box.sides)])
        probe = 0.02 * float(np.median(nn))
    grid, steps = candidate_lattice(sub, probe)
    d, _ = tree.query(grid)
    return float(d.max() + 0.5 * np.sqrt((steps ** 2).sum()))


def with_measured_eta(X: DeloneSet, probe: float | None = None) -> DeloneSet:
    """Same set with eta tightened to a measured (still rigorous) covering-radius bound."""
    eta = measure_covering_radius(X.points, X.window, probe)
    return X.with_eta(min(eta, X.eta))


def band_pairs(points: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """All pairs (i < j) with lo < |x_i - x_j| < hi, sorted."""
    pts = np.ascontiguousarray(points, dtype=float)
    cells = np.floor((pts - pts.min(axis=0)) / hi).astype(np.int64) if pts.size else np.zeros((0, 1), np.int64)
    out = np.empty((max(16, 4 * pts.shape[0]), 2), dtype=np.int64)
    c = kernels.band_pair_count(pts, cells, lo, hi, out)
    if c > out.shape[0]:
        out = np.empty((c, 2), dtype=np.int64)
        c = kernels.band_pair_count(pts, cells, lo, hi, out)
    p = out[:c]
    return p[np.lexsort((p[:, 1], p[:, 0]))]


def _shell(k: int, dim: int) -> np.ndarray:
    """Integer vectors with sup-norm exactly k, in lexicographic order."""
    faces = []
    for a in range(dim):
        for sgn in (-k, k):
            ranges = [np.arange(-k + 1, k) if b < a else np.arange(-k, k + 1) for b in range(dim)]
            ranges[a] = np.array([sgn])
            mesh = np.meshgrid(*ranges, indexing="ij")
            faces.append(np.column_stack([m.ravel() for m in mesh]))
    v = np.unique(np.concatenate(faces), axis=0)
    return v


def corona_gap_perturb(X: DeloneSet, params: CoronaGapParams, A: Iterable[int] = (),
                       resolution: float | None = None, max_rings: int | None = None,
                       slack: float = DEFAULT_SLACK) -> tuple[DeloneSet, Perturbation]:
    """Move points by less than epsilon so no pair distance falls in (sigma - rho, sigma + rho).

    Points are processed in ascending id.  A point with no current distance in
    the open band stays put; otherwise its replacement is the first position
    of a square spiral around it (step ``resolution``, default min(rho,
    epsilon)/4) that lies strictly inside the epsilon-ball and keeps every
    current distance at least ``slack`` outside the closed band.  Points in
    ``A`` never move.
    """
    tau, sigma, rho, eps = X.tau, params.sigma, params.rho, params.epsilon
    if not eps < tau / 2:
        raise DeloneError("need epsilon < tau/2")
    pts = X.points
    n, dim = pts.shape
    frozen = np.zeros(n, dtype=bool)
    A = sorted(set(int(a) for a in A))
    if A and (A[0] < 0 or A[-1] >= n):
        raise DeloneError("frozen ids out of range")
    frozen[A] = True
    if len(A) > 1 and band_pairs(pts[A], sigma - rho, sigma + rho).size:
        raise DeloneError("frozen points already have a distance inside the forbidden band")
    h = resolution or min(rho, eps) / 4
    rings = max_rings or int(math.ceil(eps / h))
    Y = pts.copy()
    tree = cKDTree(pts)
    reach = sigma + rho + 2 * eps + 1e-9
    shells: dict[int, np.ndarray] = {}
    moved = []
    for i in range(n):
        if frozen[i]:
            continue
        nb = np.array(tree.query_ball_point(pts[i], reach), dtype=np.int64)
        nb = nb[nb != i]
        cur = Y[nb]
        d = euclidean_rows(cur, np.broadcast_to(Y[i], cur.shape)) if nb.size else np.empty(0)
        if not np.any((sigma - rho < d) & (d < sigma + rho)):
            continue
        found = -1
        for k in range(1, rings + 1):
            if k not in shells:
                if len(shells) > 64:
                    shells.clear()
                shells[k] = _shell(k, dim).astype(float)
            cand = pts[i] + h * shells[k]
            found = kernels.first_valid(cand, pts[i], cur, sigma - rho - slack, sigma + rho + slack, eps)
            if found >= 0:
                Y[i] = cand[found]
                break
        if found < 0:
            raise GapSearchExhausted(i, rings)
        moved.append(i)
    disp = euclidean_rows(Y, pts)
    new_tau = tau - 2 * eps
    out = DeloneSet(PointCloud(Y, new_tau, X.eta + eps), new_tau, X.eta + eps, X.window)
    pert = Perturbation({i: i for i in range(n)}, eps,
                        {"moved": moved, "max_displacement": float(disp.max()) if n else 0.0})
    return out, pert


def perturbation_certificate(X: DeloneSet, Xp: DeloneSet, pert: Perturbation) -> NetCertificate:
    """Certificate for the perturbed set, checked in the joint space of old and new points.

    Ids 0..n-1 are the original points, n..2n-1 their images.
    """
    n = X.n
    joint = EuclideanSpace(np.vstack([X.points, Xp.points]))
    pairing = {i: n + pert.pairing[i] for i in range(n)}
    cert = apply_perturbation(joint, X.certificate(), Perturbation(pairing, pert.epsilon))
    return NetCertificate(tuple(v - n for v in cert.subset), cert.separation, cert.covering_radius)


def delone_to_graph(X: DeloneSet, sigma: float, colors=None, require_connectivity: bool = True) -> ColoredGraph:
    """Graph on the points with an edge iff 0 < distance <= sigma.

    Requires sigma >= 3 eta unless ``require_connectivity`` is False, in
    which case connectivity is no longer guaranteed.  Points within sigma of
    the window boundary are marked as boundary vertices, since their
    neighbours may lie outside.
    """
    if require_connectivity and sigma < 3 * X.eta:
        raise DeloneError(f"sigma={sigma} < 3*eta={3 * X.eta}: connectivity is not guaranteed")
    pts = X.points
    pairs = cKDTree(pts).query_pairs(sigma * (1 + 1e-7), output_type="ndarray")
    if pairs.size:
        d = euclidean_rows(pts[pairs[:, 0]], pts[pairs[:, 1]])
        pairs = pairs[(d <= sigma) & (d > 0)]
    boundary = X.window.boundary_distance(pts) < sigma
    return ColoredGraph.from_edges(X.n, pairs, colors, boundary=boundary)


@dataclass
class GraphClaims:
    connected: bool
    max_degree: int
    degree_bound: int
    hop_in_euclid: bool
    euclid_in_hop: bool
    checked_vertices: int
    r_max: int
    counterexamples: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.connected and self.max_degree <= self.degree_bound and self.hop_in_euclid and self.euclid_in_hop


def graph_claims(X: DeloneSet, G: ColoredGraph, sigma: float, r_max: int = 5,
                 interior_only: bool = True, tau: float | None = None) -> GraphClaims:
    """Exhaustively check connectivity, the degree bound and the metric sandwich

    D_hop(x, r) within the Euclidean ball of radius r*sigma, and the Euclidean
    r-ball within D_hop(x, floor(r/eta) + 1), for every checked x and every
    real r <= r_max (so integer r in particular).  The degree bound is
    packing_bound(dim, tau, sigma) with tau defaulting to the measured
    minimum pair distance.
    """
    pts = X.points
    sep = float(np.min(cKDTree(pts).query(pts, k=2)[0][:, 1])) if X.n > 1 else X.tau
    bound = packing_bound(X.window.dim, sep if tau is None else tau, sigma)
    eta = X.eta
    hops = max(r_max, int(math.floor(r_max / eta)) + 1)
    check = np.flatnonzero(~G.boundary) if (interior_only and G.boundary is not None) else np.arange(G.n)
    tree = cKDTree(pts)
    ok1 = ok2 = True
    bad = []
    for x in check:
        verts, hd = G.bfs(int(x), hops)
        dm = euclidean_rows(pts[verts], np.broadcast_to(pts[x], (verts.size, pts.shape[1])))
        near = hd <= r_max
        if np.any(dm[near] > hd[near] * sigma):
            ok1 = False
            bad.append(("hop_in_euclid", int(x)))
        eb = np.array(tree.query_ball_point(pts[x], r_max * (1 + 1e-7)), dtype=np.int64)
        de = euclidean_rows(pts[eb], np.broadcast_to(pts[x], (eb.size, pts.shape[1])))
        eb, de = eb[de <= r_max], de[de <= r_max]
        hop_of = np.full(G.n, -1, dtype=np.int64)
        hop_of[verts] = hd
        he = hop_of[eb]
        allowed = np.floor(np.maximum(de, 0) / eta) + 1
        if np.any((he < 0) | (he > allowed)):
            ok2 = False
            bad.append(("euclid_in_hop", int(x)))
    return GraphClaims(G.is_connected(), G.max_degree, bound, ok1, ok2, int(check.size), r_max, bad[:20])
