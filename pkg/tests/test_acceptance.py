"""Acceptance criteria, each under its own wall-clock limit.

Every test appends one ``criterion k PASS/FAIL`` line to the session log,
which is printed at the end of the run.  Oracles here are written
independently of the package code they check.
"""
import itertools
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest
from scipy.spatial.distance import cdist, pdist

from repnet import cli
from repnet.delone import (CoronaGapParams, EuclideanBox, corona_gap_perturb, delone_to_graph, generate_delone,
                           graph_claims, measure_covering_radius, packing_bound)
from repnet.graph_space import (ColoredGraph, ball_isomorphism, cycle_graph, hop_ball, path_graph,
                                persistence_depth, ppqi_check, repetitivity_radius)
from repnet.hierarchy import (Hierarchy, density_report, limit_levels, make_schedule, verify_level)
from repnet.metric_core import EuclideanSpace, NetCertificate, Perturbation, apply_perturbation, greedy_maximal_net


@contextmanager
def criterion(log, k, limit):
    t0 = time.perf_counter()
    passed = False
    try:
        yield
        passed = True
    finally:
        dt = time.perf_counter() - t0
        ok = passed and dt <= limit
        line = f"criterion {k:2d} {'PASS' if ok else 'FAIL'}  {dt:7.2f}s / {limit}s"
        log.append(line)
        print(line)
    assert dt <= limit, f"criterion {k} took {dt:.2f}s, limit {limit}s"


# 1 -------------------------------------------------------------------------

def test_criterion_01_net_laws(acceptance_log):
    rng = np.random.default_rng(101)
    with criterion(acceptance_log, 1, 10):
        for _ in range(50):
            n = int(rng.integers(2, 2001))
            pts = rng.uniform(0, rng.uniform(5, 60), (n, 2))
            K = float(rng.uniform(0.3, 3.0))
            cert = greedy_maximal_net(EuclideanSpace(pts), K)
            net = np.array(cert.subset, dtype=np.int64)
            D = cdist(pts, pts[net])
            # K-separated: all pairs inside the net
            if net.size > 1:
                assert pdist(pts[net]).min() >= K
            # maximal: re-inserting any other point breaks separation
            others = np.setdiff1d(np.arange(n), net)
            assert np.all(D[others].min(axis=1) < K)
            # covering radius at most K
            assert D.min(axis=1).max() <= K
            assert cert.covering_radius == pytest.approx(D.min(axis=1).max(), abs=1e-12)


# 2 -------------------------------------------------------------------------

def test_criterion_02_perturbation_certificates(acceptance_log):
    rng = np.random.default_rng(202)
    with criterion(acceptance_log, 2, 5):
        for _ in range(20):
            tau = float(rng.uniform(0.5, 3.0))
            eps = float(rng.uniform(0.01, 0.49)) * tau
            eta = float(rng.uniform(eps, 2 * tau))
            line = np.array([0, tau, 2 * tau, 3 * tau,                 # the net
                             eps, tau - eps, 2 * tau, 3 * tau - eps,     # its images
                             3 * tau + eta])                             # one more ambient point
            ang = rng.uniform(0, 2 * math.pi)
            direction = np.array([math.cos(ang), math.sin(ang)])
            pts = rng.uniform(-10, 10, 2) + line[:, None] * direction
            space = EuclideanSpace(pts)
            net = NetCertificate((0, 1, 2, 3), tau, eta)
            cert = apply_perturbation(space, net, Perturbation({0: 4, 1: 5, 2: 6, 3: 7}, eps))
            img = np.array(cert.subset)
            measured_sep = pdist(pts[img]).min()
            measured_cov = cdist(pts, pts[img]).min(axis=1).max()
            assert abs(cert.separation - measured_sep) <= 1e-9
            assert abs(cert.covering_radius - measured_cov) <= 1e-9
            assert abs(cert.separation - (tau - 2 * eps)) <= 1e-12


# 3 and 4 -------------------------------------------------------------------

@pytest.fixture(scope="module")
def corona_run():
    t0 = time.perf_counter()
    box = EuclideanBox((0, 0), (50, 50))
    X = generate_delone(box, 1.0)
    X = X.with_eta(min(X.eta, measure_covering_radius(X.points, box)))
    params = CoronaGapParams.from_budget(2, 1.0, 3.0, 0.2)
    lo, hi = params.sigma - params.rho, params.sigma + params.rho
    rng = np.random.default_rng(303)
    A: list[int] = []
    for v in rng.permutation(X.n):
        d = np.linalg.norm(X.points[A] - X.points[v], axis=1) if A else np.empty(0)
        if not np.any((d >= lo) & (d <= hi)):
            A.append(int(v))
        if len(A) == 10:
            break
    Y, pert = corona_gap_perturb(X, params, A)
    return {"X": X, "Y": Y, "A": A, "params": params, "pert": pert, "seconds": time.perf_counter() - t0}


def test_criterion_03_corona_gap(acceptance_log, corona_run):
    with criterion(acceptance_log, 3, 60):
        X, Y, A, params = corona_run["X"], corona_run["Y"], corona_run["A"], corona_run["params"]
        assert corona_run["seconds"] < 60
        assert params.rho == pytest.approx(0.04 / 4248 / 2, rel=1e-9)
        assert len(A) == 10
        disp = np.linalg.norm(Y.points - X.points, axis=1)
        assert np.all(disp[A] == 0)
        assert disp.max() < 0.2
        d = pdist(Y.points)
        assert d.min() >= 1.0 - 2 * 0.2
        assert measure_covering_radius(Y.points, X.window) <= X.eta + 0.2
        in_band = (d > params.sigma - params.rho) & (d < params.sigma + params.rho)
        assert int(in_band.sum()) == 0
        assert len(corona_run["pert"].meta["moved"]) > 0


def test_criterion_04_graph_claims(acceptance_log, corona_run):
    with criterion(acceptance_log, 4, 60):
        Y = corona_run["Y"]
        eta = measure_covering_radius(Y.points, Y.window)
        sigma = 3.0
        assert sigma >= 3 * eta
        Yd = Y.with_eta(eta)
        G = delone_to_graph(Yd, sigma)
        claims = graph_claims(Yd, G, sigma, r_max=5, tau=Y.tau)
        assert claims.connected
        assert claims.max_degree <= packing_bound(2, Y.tau, sigma)
        assert claims.hop_in_euclid and claims.euclid_in_hop, claims.counterexamples
        # interior: every vertex at least sigma from the window boundary
        assert claims.checked_vertices == int((~G.boundary).sum()) > 0.7 * G.n


# 5 -------------------------------------------------------------------------

def random_colored_graph(rng, n):
    iu = np.triu_indices(n, 1)
    keep = rng.random(iu[0].size) < rng.uniform(0.2, 0.7)
    return ColoredGraph.from_edges(n, np.column_stack([iu[0][keep], iu[1][keep]]),
                                   rng.integers(0, int(rng.integers(1, 3)), n))


def relabel(g, perm):
    e = g.edges()
    colors = np.empty(g.n, dtype=np.int64)
    colors[perm] = g.colors
    return ColoredGraph.from_edges(g.n, perm[e], colors)


def brute_ball_iso(g1, x, g2, y, R):
    """Lex-smallest center- and color-preserving isomorphism of induced R-balls, by enumeration."""
    def ball(g, c):
        d = {c: 0}
        frontier = [c]
        for k in range(R):
            nxt = []
            for u in frontier:
                for v in g.neighbors(u):
                    if int(v) not in d:
                        d[int(v)] = k + 1
                        nxt.append(int(v))
            frontier = nxt
        return sorted(d)
    A, B = ball(g1, x), ball(g2, y)
    if len(A) != len(B):
        return None
    for img in itertools.permutations(B):
        f = dict(zip(A, img))
        if f[x] != y or any(g1.colors[a] != g2.colors[f[a]] for a in A):
            continue
        if all(g1.has_edge(a, b) == g2.has_edge(f[a], f[b]) for a, b in itertools.combinations(A, 2)):
            return list(img)
    return None


def test_criterion_05_ball_isomorphism(acceptance_log):
    rng = np.random.default_rng(505)
    found = 0
    with criterion(acceptance_log, 5, 30):
        for k in range(500):
            n = int(rng.integers(1, 9))
            g1 = random_colored_graph(rng, n)
            g2 = relabel(g1, rng.permutation(n)) if k % 2 else random_colored_graph(rng, n)
            x, y = int(rng.integers(n)), int(rng.integers(n))
            R = int(rng.integers(0, 4))
            iso = ball_isomorphism(hop_ball(g1, x, R), hop_ball(g2, y, R))
            expect = brute_ball_iso(g1, x, g2, y, R)
            got = None if iso is None else iso.image.tolist()
            assert got == expect, (k, n, x, y, R)
            found += expect is not None
    assert found > 100


# 6 -------------------------------------------------------------------------

def iso_onto_image(g1, dom, g2, f):
    img = [f[v] for v in dom]
    if len(set(img)) != len(img):
        return False
    return all(g1.has_edge(a, b) == g2.has_edge(f[a], f[b]) for a, b in itertools.combinations(dom, 2))


def test_criterion_06_ppqi(acceptance_log):
    rng = np.random.default_rng(606)
    accepted = 0
    with criterion(acceptance_log, 6, 10):
        for k in range(200):
            kind = k % 4
            if kind == 0:
                g1 = cycle_graph(int(rng.integers(8, 30)))
            elif kind == 1:
                m = int(rng.integers(8, 30))
                g1 = path_graph(m, colors=rng.integers(0, 2, m), ends_are_boundary=False)
            else:
                g1 = random_colored_graph(rng, int(rng.integers(4, 12)))
            n = g1.n
            perm = rng.permutation(n)
            g2 = relabel(g1, perm)
            x = int(rng.integers(n))
            R = int(rng.integers(1, 4))
            dom = hop_ball(g1, x, R).members.tolist()
            f = {v: int(perm[v]) for v in dom}
            if kind == 2 and len(dom) > 2:  # swap two non-center images
                a, b = rng.choice([v for v in dom if v != x], 2, replace=False)
                f[int(a)], f[int(b)] = f[int(b)], f[int(a)]
            elif kind == 3:  # arbitrary pointed map
                for v in dom:
                    if v != x:
                        f[v] = int(rng.integers(n))
            lam = float(rng.uniform(1.0, 1.9))
            res = ppqi_check(g1, x, g2, int(perm[x]), R, lam, f)
            if res.accepted:
                accepted += 1
                assert iso_onto_image(g1, dom, g2, f), (k, dom, f)
    assert accepted >= 50


# 7 -------------------------------------------------------------------------

def independent_conditions(sch):
    """Slack of every inequality, evaluated straight from the defining formulas."""
    l0 = sch.lambda0
    out = {}
    prev = dict(r=0, s=0, t=0, w=0)
    for i in range(len(sch.r)):
        r, s, t, lam, w = sch.r[i], sch.s[i], sch.t[i], sch.lam[i], sch.omega[i]
        rp, sp, tp, wp = prev["r"], prev["s"], prev["t"], prev["w"]
        lam_prev = sch.lam[i - 1] if i else sch.lambda_minus1
        out[("r_growth", i)] = r / (l0 ** 5 / (l0 - 1) * (rp + sp + tp + 2 * wp + 1)) - 1
        out[("s_growth", i)] = s / (2 * l0 ** 5 * (r + sp + w)) - 1
        out[("t_growth", i)] = t / (l0 ** 3 * (5 * tp + r + sp + 2 * wp + 1)) - 1
        big_lambda = lam ** 2  # bound on the tail product from lambda_{k}^2 < lambda_{k-1}
        rhs_t = 4 * (lam ** 4 + lam ** 2 - 1) / lam ** 2 * r + tp + big_lambda * (sp + 2 * wp + w)
        out[("t_distortion", i)] = t / rhs_t - 1
        out[("lambda_decay", i)] = math.log(lam_prev) / (2 * math.log(lam)) - 1
        if i:
            for k in (5, 6):
                ratio = (r * (lam ** k - 1) / lam ** 2) / (rp * (lam_prev ** k - 1) / lam_prev ** 2)
                out[(f"ratio_k{k}", i)] = 2 ** (2.0 ** -i) / ratio - 1
        prev = dict(r=r, s=s, t=t, w=w)
    return out


def test_criterion_07_schedule(acceptance_log):
    with criterion(acceptance_log, 7, 1):
        sch = make_schedule(1.25, 0.0, 3)
        slack = independent_conditions(sch)
        bad = {k: v for k, v in slack.items() if not v >= 0.05}
        assert not bad, bad
        assert len(slack) == 3 * 5 + 2 * 2
        assert sch.lam[0] ** 2 < 2
        assert math.prod(sch.lam) < sch.lam[0] ** 2 < 2
        for i in range(1, 3):
            assert sch.lam[i] ** 2 < sch.lam[i - 1]


# 8 -------------------------------------------------------------------------

def test_criterion_08_cycle_hierarchy(acceptance_log):
    with criterion(acceptance_log, 8, 120):
        # a constantly colored cycle is vertex-transitive, so every omega_i is 0
        sch = make_schedule(1.25, 0.0, 3)
        N = 4 * sch.r[2]
        h = Hierarchy(cycle_graph(N), 0, sch)
        built = h.build()
        assert sorted(built) == [(0, 1), (0, 2), (1, 2)]
        for key in built:
            rep = verify_level(h.levels[key], h)
            assert all(c["ok"] for c in rep["clauses"].values()), (key, rep["clauses"])
        l0, l1 = limit_levels(h, 0), limit_levels(h, 1)
        assert l0.checks["nested_in"] == [1, 2] and l1.checks["nested_in"] == [2]
        assert set(l1.X.tolist()) <= set(l0.X.tolist())
        dom0 = h.domain(0).members
        for x in l1.X:
            assert np.array_equal(l0.maps[int(x)], l1.maps[int(x)][h.domain(1).local(dom0)])
        for lim in (l0, l1):
            dens = density_report(h, lim)
            assert dens["measured"] <= dens["bound"], dens


# 9 -------------------------------------------------------------------------

def test_criterion_09_pattern_statistics(acceptance_log):
    with criterion(acceptance_log, 9, 10):
        g = path_graph(1000, colors=np.arange(1000) % 2)
        for R in range(11):
            window = np.flatnonzero(g.interior(R))
            assert repetitivity_radius(g, 500, R, window) <= 2
        inj = path_graph(1000, colors=np.arange(1000))
        window = np.arange(400, 460)
        tab = persistence_depth(inj, window, 3)
        assert (tab.depth[~np.eye(window.size, dtype=bool)] == 0).all()


# 10 ------------------------------------------------------------------------

def test_criterion_10_pipeline_reproducible(acceptance_log, tmp_path):
    with criterion(acceptance_log, 10, 300):
        a, b = tmp_path / "a", tmp_path / "b"
        assert cli.main(["pipeline", "--out", str(a)]) == 0
        assert cli.main(["pipeline", "--out", str(b)]) == 0
        assert (a / "manifest.json").read_bytes() == (b / "manifest.json").read_bytes()
