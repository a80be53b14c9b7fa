"""Time the numba kernels against the numpy fallback on identical inputs.

    python3 benchmarks/bench_kernels.py [--size N] [--repeat K]

Both backends are imported directly, so REPNET_NUMBA does not matter here.
Each row checks that the two backends return the same result before
reporting the best-of-K wall time.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from repnet.graph_space.balls import hop_ball
from repnet.graph_space.graph import ColoredGraph
from repnet.graph_space.isomorphism import joint_classes
from repnet.kernels import numba_impl, numpy_impl


def best_of(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def grid_graph(side: int) -> ColoredGraph:
    idx = np.arange(side * side).reshape(side, side)
    e = np.concatenate([np.column_stack([idx[:, :-1].ravel(), idx[:, 1:].ravel()]),
                        np.column_stack([idx[:-1, :].ravel(), idx[1:, :].ravel()])])
    return ColoredGraph.from_edges(side * side, e)


def case_bfs(size):
    g = grid_graph(size)

    def run(impl):
        dist = np.full(g.n, -1, dtype=np.int64)
        out = np.empty(g.n, dtype=np.int64)
        c = impl.bfs_bounded(g.indptr, g.indices, np.array([g.n // 2]), size // 3, dist, out)
        return np.sort(out[:c])
    return f"bfs_bounded (grid {size}x{size})", run, np.array_equal


def case_greedy(size):
    g = grid_graph(size)
    order = np.random.default_rng(1).permutation(g.n).astype(np.int64)

    def run(impl):
        return impl.greedy_conflict_net(order, g.indptr, g.indices, 0)
    return f"greedy_conflict_net ({g.n} vertices)", run, np.array_equal


def case_band(size):
    rng = np.random.default_rng(2)
    n = size * size // 4
    pts = rng.uniform(0, size, (n, 2))
    hi = 3.0
    cells = np.floor((pts - pts.min(axis=0)) / hi).astype(np.int64)

    def run(impl):
        out = np.empty((64 * n, 2), dtype=np.int64)
        c = impl.band_pair_count(pts, cells, 2.9, hi, out)
        p = out[:c]
        return p[np.lexsort((p[:, 1], p[:, 0]))]
    return f"band_pair_count ({n} points)", run, np.array_equal


def case_iso(size):
    n = size * 4
    e = np.concatenate([np.column_stack([np.arange(n - 1), np.arange(1, n)]),
                        np.column_stack([np.arange(n - 2), np.arange(2, n)])])
    g = ColoredGraph.from_edges(n, e)
    R = size // 2
    b1, b2 = hop_ball(g, n // 2, R), hop_ball(g, n // 2 + 7, R)
    ca, cb = joint_classes(b1, b2)
    anchor = np.full(b1.size, -1, dtype=np.int64)
    has = np.diff(b1.indptr) > 0
    first = b1.indices[b1.indptr[:-1][has]]
    anchor[has] = np.where(first < np.flatnonzero(has), first, -1)
    bucket = np.lexsort((np.arange(b2.size), cb)).astype(np.int64)
    lo = np.searchsorted(cb[bucket], ca, side="left").astype(np.int64)
    hi = np.searchsorted(cb[bucket], ca, side="right").astype(np.int64)

    def run(impl):
        fmap, _ = impl.iso_search(b1.size, b1.indptr, b1.indices, ca.astype(np.int64), anchor,
                                  b2.indptr, b2.indices, cb.astype(np.int64), bucket, lo, hi, 0)
        return fmap
    return f"iso_search (ball of {b1.size} vertices)", run, np.array_equal


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=300)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    print(f"{'kernel':42s} {'numba s':>10s} {'numpy s':>10s} {'speedup':>8s}  agree")
    for case in (case_bfs, case_greedy, case_band, case_iso):
        name, run, same = case(args.size)
        run(numba_impl)  # compile outside the timing
        t_nb, r_nb = best_of(lambda: run(numba_impl), args.repeat)
        t_np, r_np = best_of(lambda: run(numpy_impl), args.repeat)
        print(f"{name:42s} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:8.1f}  {same(r_nb, r_np)}")


if __name__ == "__main__":
    main()
