"""Pure numpy kernels.

Frontier-at-a-time BFS, vectorized scans and a KD-tree pair search replace
the loop kernels where the work vectorizes; the backtracking isomorphism
search and the greedy conflict scan stay sequential by nature and run the
interpreted loop bodies.
"""
import numpy as np
from scipy.spatial import cKDTree

from . import _loops

iso_search = _loops.iso_search


def gather_neighbors(indptr, indices, verts):
    starts = indptr[verts]
    lens = indptr[verts + 1] - starts
    total = int(lens.sum())
    if total == 0:
        return np.empty(0, dtype=indices.dtype)
    offs = np.repeat(starts - np.concatenate(([0], np.cumsum(lens)[:-1])), lens)
    return indices[offs + np.arange(total)]


def bfs_bounded(indptr, indices, sources, radius, dist, out):
    frontier = np.unique(sources)
    frontier = frontier[dist[frontier] < 0]
    dist[frontier] = 0
    tail = frontier.size
    out[:tail] = frontier
    level = 0
    while frontier.size and (radius < 0 or level < radius):
        nb = gather_neighbors(indptr, indices, frontier)
        nb = np.unique(nb[dist[nb] < 0])
        level += 1
        dist[nb] = level
        out[tail:tail + nb.size] = nb
        tail += nb.size
        frontier = nb
    return tail


def next_free(order, start, blocked, allowed):
    # doubling chunks keep a scan that stops early from touching the whole tail
    n = order.shape[0]
    k, step = start, 64
    while k < n:
        chunk = order[k:k + step]
        ok = allowed[chunk] & ~blocked[chunk]
        if ok.any():
            return k + int(np.argmax(ok))
        k += step
        step *= 2
    return n


def greedy_conflict_net(order, indptr, indices, n_required):
    n = indptr.shape[0] - 1
    blocked = np.zeros(n, dtype=np.bool_)
    chosen = np.zeros(n, dtype=np.bool_)
    allowed = np.ones(n, dtype=np.bool_)
    for v in order[:n_required]:
        chosen[v] = True
        blocked[indices[indptr[v]:indptr[v + 1]]] = True
    k = n_required
    while True:
        k = next_free(order, k, blocked, allowed)
        if k >= order.shape[0]:
            return chosen
        v = order[k]
        chosen[v] = True
        blocked[indices[indptr[v]:indptr[v + 1]]] = True
        k += 1


def _pair_dist(coords, i, j):
    s = np.zeros(i.shape[0])
    for k in range(coords.shape[1]):
        d = coords[i, k] - coords[j, k]
        s += d * d
    return np.sqrt(s)


def band_pair_count(coords, cells, lo, hi, out):
    del cells  # the KD-tree needs no bucket grid
    pairs = cKDTree(coords).query_pairs(hi * (1 + 1e-7), output_type="ndarray")
    if pairs.size == 0:
        return 0
    d = _pair_dist(coords, pairs[:, 0], pairs[:, 1])
    pairs = pairs[(lo < d) & (d < hi)]
    m = min(pairs.shape[0], out.shape[0])
    out[:m] = pairs[:m]
    return pairs.shape[0]


def first_valid(cands, center, nbrs, band_lo, band_hi, eps):
    s = np.zeros(cands.shape[0])
    for k in range(cands.shape[1]):
        d = cands[:, k] - center[k]
        s += d * d
    ok = np.sqrt(s) < eps
    if nbrs.shape[0]:
        s = np.zeros((cands.shape[0], nbrs.shape[0]))
        for k in range(cands.shape[1]):
            d = cands[:, k, None] - nbrs[None, :, k]
            s += d * d
        dd = np.sqrt(s)
        ok &= ~((band_lo <= dd) & (dd <= band_hi)).any(axis=1)
    hit = np.flatnonzero(ok)
    return int(hit[0]) if hit.size else -1
