import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from repnet.graph_space import (ColoredGraph, GraphError, NotRepetitive, OmegaOracle, agreement_radius,
                                ball_isomorphism, check_ball_isomorphism, cycle_graph, gstar_distance, hop_ball,
                                omega_set, path_graph, persistence_depth, ppqi_check, repetitivity_radius)


@st.composite
def colored_graphs(draw, max_n=9, colors=2):
    n = draw(st.integers(1, max_n))
    pairs = list(itertools.combinations(range(n), 2))
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    edges = np.array([p for p, m in zip(pairs, mask) if m], dtype=np.int64).reshape(-1, 2)
    col = draw(st.lists(st.integers(0, colors - 1), min_size=n, max_size=n))
    return ColoredGraph.from_edges(n, edges, np.array(col))


def grid(side):
    idx = np.arange(side * side).reshape(side, side)
    e = np.concatenate([np.column_stack([idx[:, :-1].ravel(), idx[:, 1:].ravel()]),
                        np.column_stack([idx[:-1, :].ravel(), idx[1:, :].ravel()])])
    return ColoredGraph.from_edges(side * side, e)


# balls --------------------------------------------------------------------

def test_hop_ball_examples():
    g = cycle_graph(10)
    b = hop_ball(g, 0, 2)
    assert b.members.tolist() == [0, 1, 2, 8, 9]
    assert b.levels.tolist() == [0, 1, 2, 2, 1]
    assert b.num_edges == 4
    assert hop_ball(g, 3, 0).members.tolist() == [3]
    assert hop_ball(g, 0, 5).size == 10
    with pytest.raises(GraphError):
        hop_ball(g, 0, -1)
    with pytest.raises(GraphError):
        hop_ball(g, 10, 1)


def test_grid_ball_is_a_diamond():
    g = grid(21)
    b = hop_ball(g, 10 * 21 + 10, 4)
    assert b.size == 2 * 4 * 4 + 2 * 4 + 1


@given(colored_graphs(max_n=12), st.integers(0, 11), st.integers(0, 4))
def test_ball_growth_bound(g, x, R):
    x = x % g.n
    b = hop_ball(g, x, R)
    D = g.max_degree
    bound = 1 + sum(D * (D - 1) ** (k - 1) for k in range(1, R + 1))
    assert b.size <= bound
    d = g.distances_from(x)
    assert b.members.tolist() == sorted(np.flatnonzero((d >= 0) & (d <= R)).tolist())


def test_path_ball_truncation():
    g = path_graph(11)
    assert hop_ball(g, 5, 5).truncated is False
    assert hop_ball(g, 5, 6).truncated is True
    assert hop_ball(g, 2, 3).truncated is True


# isomorphism --------------------------------------------------------------

def test_identity_is_found():
    g = grid(7)
    b = hop_ball(g, 24, 3)
    iso = ball_isomorphism(b, b)
    assert iso is not None
    assert np.array_equal(iso.image, b.members)  # lex-smallest is the identity
    assert check_ball_isomorphism(b, b, iso.image) is None


def test_cycle_is_vertex_transitive():
    g = cycle_graph(5)
    for x in range(5):
        iso = ball_isomorphism(hop_ball(g, 0, 2), hop_ball(g, x, 2))
        assert iso is not None and iso(0) == x


def test_path_middle_and_end_differ():
    g = path_graph(5, colors=[1, 2, 1, 2, 1])
    assert ball_isomorphism(hop_ball(g, 2, 1), hop_ball(g, 0, 1)) is None
    assert ball_isomorphism(hop_ball(g, 2, 1), hop_ball(g, 4, 1)) is None
    assert ball_isomorphism(hop_ball(g, 0, 1), hop_ball(g, 4, 1)) is not None


def test_mismatched_radius_is_rejected():
    g = cycle_graph(8)
    b1, b2 = hop_ball(g, 0, 1), hop_ball(g, 0, 2)
    with pytest.raises(GraphError):
        ball_isomorphism(b1, b2)
    assert check_ball_isomorphism(b1, b2, b1.members) == "radius mismatch"


def test_witness_checker_catches_bad_maps():
    g = cycle_graph(8, colors=[0, 1, 0, 0, 0, 0, 0, 0])
    b = hop_ball(g, 0, 2)  # members 0 1 2 6 7
    assert check_ball_isomorphism(b, b, [0, 7, 6, 2, 1]) == "colors not preserved"
    assert check_ball_isomorphism(b, b, [0, 1, 2, 7, 6]) == "distance to center not preserved"
    assert check_ball_isomorphism(b, b, [1, 0, 2, 6, 7]) == "center not mapped to center"
    assert check_ball_isomorphism(b, b, [0, 1, 1, 6, 7]) is not None


@given(colored_graphs(max_n=8), st.integers(0, 7), st.integers(0, 7), st.integers(0, 3))
def test_found_witness_always_validates(g, x, y, R):
    b1, b2 = hop_ball(g, x % g.n, R), hop_ball(g, y % g.n, R)
    iso = ball_isomorphism(b1, b2)
    if iso is not None:
        assert check_ball_isomorphism(b1, b2, iso.image) is None
        back = ball_isomorphism(b2, b1)
        assert back is not None


# pattern distance ---------------------------------------------------------

def test_gstar_examples():
    g = cycle_graph(12)
    assert gstar_distance(g, 0, g, 5, 4) == 0.0
    h = cycle_graph(12, colors=[1] + [0] * 11)
    assert gstar_distance(h, 0, h, 5, 4) == 2.0
    assert gstar_distance(h, 2, h, 3, 4) == 0.5  # agree at radius 1, not at 2
    assert agreement_radius(h, 2, h, 3, 4) == (1, False)
    assert gstar_distance(h, 5, h, 6, 4) == 0.0  # first difference at radius 5


@pytest.mark.parametrize("k", [0, 1, 2, 5])
def test_distance_from_end_is_the_agreement_radius(k):
    p = path_graph(40)
    c = cycle_graph(40)
    assert agreement_radius(p, k, c, 0, 10) == (k, False)
    assert gstar_distance(p, k, c, 0, 10) == 2.0 ** -k


@given(colored_graphs(max_n=8), st.integers(0, 7), st.integers(0, 7), st.integers(0, 7))
def test_gstar_is_an_ultrametric(g, a, b, c):
    a, b, c = a % g.n, b % g.n, c % g.n
    d = lambda u, v: gstar_distance(g, u, g, v, 4)
    assert d(a, a) == 0.0
    assert d(a, b) == d(b, a)
    assert d(a, c) <= max(d(a, b), d(b, c))


# ppqi ---------------------------------------------------------------------

def test_ppqi_examples():
    g = cycle_graph(20)
    ident = {v: v for v in hop_ball(g, 0, 3).members.tolist()}
    res = ppqi_check(g, 0, g, 0, 3, 1.0, ident)
    assert res and res.isomorphism_onto_image and res.isometric_radius == 3.0
    reflect = {v: (-v) % 20 for v in ident}
    assert ppqi_check(g, 0, g, 0, 3, 1.0, reflect)
    shift = {v: (v + 5) % 20 for v in ident}
    assert not ppqi_check(g, 0, g, 0, 3, 1.0, shift)  # not pointed
    assert ppqi_check(g, 0, g, 5, 3, 1.0, shift)
    squash = dict(ident)
    squash[3] = 2
    res = ppqi_check(g, 0, g, 0, 3, 1.5, squash)
    assert not res and "bilipschitz" in res.reason
    h = cycle_graph(20, colors=[0, 1] + [0] * 18)
    assert ppqi_check(h, 0, h, 0, 3, 1.0, reflect).reason == "colors not preserved"


def test_ppqi_domain_must_be_the_ball():
    g = cycle_graph(20)
    with pytest.raises(GraphError):
        ppqi_check(g, 0, g, 0, 3, 1.0, {0: 0, 1: 1})
    with pytest.raises(GraphError):
        ppqi_check(g, 0, g, 0, 1, 0.9, {0: 0, 1: 1, 19: 19})


def test_ppqi_large_distortion_accepts_non_isometries():
    g = path_graph(30, ends_are_boundary=False)
    h = cycle_graph(30)
    # fold-free stretch of a path into a cycle is an isometry on small balls
    m = {v: v for v in range(10, 17)}
    assert ppqi_check(g, 13, h, 13, 3, 1.0, m).isomorphism_onto_image


# recurrence ---------------------------------------------------------------

def test_omega_on_a_constant_cycle_is_the_window():
    g = cycle_graph(30)
    assert omega_set(g, 0, 4, range(30)).tolist() == list(range(30))
    assert repetitivity_radius(g, 0, 4, range(30)) == 0.0


def test_omega_on_a_path_is_the_interior():
    g = path_graph(41)
    w = np.flatnonzero(g.interior(5))
    assert w.tolist() == list(range(5, 36))
    assert omega_set(g, 20, 5, w).tolist() == w.tolist()
    with pytest.raises(GraphError):
        omega_set(g, 20, 5, [3])


def test_omega_is_monotone_in_the_radius():
    rng = np.random.default_rng(4)
    g = cycle_graph(200, colors=rng.integers(0, 2, 200))
    prev = None
    for R in range(6):
        cur = set(omega_set(g, 17, R, range(200)).tolist())
        assert 17 in cur
        if prev is not None:
            assert cur <= prev
        prev = cur


def test_periodic_coloring_recurrence_radius():
    g = cycle_graph(60, colors=np.arange(60) % 3)
    assert omega_set(g, 0, 3, range(60)).tolist() == list(range(0, 60, 3))
    assert repetitivity_radius(g, 0, 3, range(60)) == 1.0


def test_injective_coloring_is_not_repetitive():
    g = path_graph(200, colors=np.arange(200))
    window = list(range(100, 150))
    with pytest.raises(NotRepetitive):
        repetitivity_radius(g, 50, 8, window)


def test_oracle_refuses_truncated_pattern():
    with pytest.raises(GraphError):
        OmegaOracle(path_graph(10), 2, 5)


def test_oracle_restriction():
    g = cycle_graph(12)
    orc = OmegaOracle(g, 0, 2, restrict=[0, 3, 6])
    assert [x for x in range(12) if x in orc] == [0, 3, 6]


# persistence --------------------------------------------------------------

def test_constant_cycle_saturates():
    t = persistence_depth(cycle_graph(16), range(16), 3)
    assert (t.depth == 4).all()
    assert t.summary["saturated_pairs"] == 16 * 15


def test_injective_coloring_has_zero_depth():
    t = persistence_depth(cycle_graph(16, colors=np.arange(16)), range(16), 3)
    off = t.depth[~np.eye(16, dtype=bool)]
    assert (off == 0).all()
    assert (np.diag(t.depth) == 4).all()
    assert t.summary["histogram"][0] == 16 * 15


def test_persistence_matches_agreement_radius():
    rng = np.random.default_rng(9)
    g = cycle_graph(40, colors=rng.integers(0, 2, 40))
    t = persistence_depth(g, range(0, 40, 3), 4)
    for a, x in enumerate(t.vertices):
        for b, y in enumerate(t.vertices):
            if a != b:
                assert t.depth[a, b] == agreement_radius(g, x, g, y, 4)[0] + 1
