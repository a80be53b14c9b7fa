"""Loop-form kernels.

Every function here is valid nopython numba code and valid plain Python.
``numba_impl`` compiles them; ``numpy_impl`` replaces the ones that
vectorize and falls back to these bodies for the inherently sequential
ones (backtracking, greedy scans).
"""
import math

import numpy as np


def bfs_bounded(indptr, indices, sources, radius, dist, out):
    """Breadth-first search from ``sources`` up to hop ``radius`` (< 0: unbounded).

    ``dist`` must be -1 on every vertex; visited vertices get their hop
    distance.  Visited vertices are written to ``out``; returns their count.
    """
    head = 0
    tail = 0
    for s in sources:
        if dist[s] < 0:
            dist[s] = 0
            out[tail] = s
            tail += 1
    while head < tail:
        v = out[head]
        head += 1
        dv = dist[v]
        if radius >= 0 and dv >= radius:
            continue
        for e in range(indptr[v], indptr[v + 1]):
            w = indices[e]
            if dist[w] < 0:
                dist[w] = dv + 1
                out[tail] = w
                tail += 1
    return tail


def next_free(order, start, blocked, allowed):
    n = order.shape[0]
    k = start
    while k < n:
        v = order[k]
        if allowed[v] and not blocked[v]:
            return k
        k += 1
    return n


def greedy_conflict_net(order, indptr, indices, n_required):
    """Greedy maximal independent set of a conflict graph in a fixed order.

    The first ``n_required`` entries of ``order`` are taken unconditionally
    (the caller checks they are mutually conflict-free).
    """
    n = indptr.shape[0] - 1
    blocked = np.zeros(n, dtype=np.bool_)
    chosen = np.zeros(n, dtype=np.bool_)
    for k in range(order.shape[0]):
        v = order[k]
        if k >= n_required and blocked[v]:
            continue
        chosen[v] = True
        for e in range(indptr[v], indptr[v + 1]):
            blocked[indices[e]] = True
    return chosen


def _sqdist(a, i, b, j):
    s = 0.0
    for k in range(a.shape[1]):
        d = a[i, k] - b[j, k]
        s += d * d
    return s


def band_pair_count(coords, cells, lo, hi, out):
    """Pairs (i < j) with lo < |x_i - x_j| < hi, via a uniform grid of cell size >= hi.

    ``cells`` holds integer cell coordinates per point.  When ``out`` has
    room the pairs are written into it; the total count is returned.
    """
    n, dim = coords.shape
    mins = np.empty(dim, dtype=np.int64)
    ext = np.empty(dim, dtype=np.int64)
    for k in range(dim):
        mins[k] = cells[:, k].min() if n > 0 else 0
        ext[k] = (cells[:, k].max() - mins[k] + 1) if n > 0 else 1
    keys = np.zeros(n, dtype=np.int64)
    for i in range(n):
        key = 0
        for k in range(dim):
            key = key * ext[k] + (cells[i, k] - mins[k])
        keys[i] = key
    perm = np.argsort(keys, kind="mergesort")
    skeys = keys[perm]
    n_off = 3 ** dim
    count = 0
    cap = out.shape[0]
    hi2 = hi * hi
    for i in range(n):
        for o in range(n_off):
            rem = o
            key = 0
            ok = True
            for k in range(dim):
                step = rem % 3 - 1
                rem //= 3
                c = cells[i, k] - mins[k] + step
                if c < 0 or c >= ext[k]:
                    ok = False
                    break
                key = key * ext[k] + c
            if not ok:
                continue
            a = np.searchsorted(skeys, key)
            while a < n and skeys[a] == key:
                j = perm[a]
                a += 1
                if j <= i:
                    continue
                s = _sqdist(coords, i, coords, j)
                if s >= hi2 * 1.0000001:
                    continue
                d = math.sqrt(s)
                if lo < d < hi:
                    if count < cap:
                        out[count, 0] = i
                        out[count, 1] = j
                    count += 1
    return count


def first_valid(cands, center, nbrs, band_lo, band_hi, eps):
    """Index of the first candidate within ``eps`` of ``center`` whose distance
    to every row of ``nbrs`` avoids the closed band [band_lo, band_hi]; -1 if none."""
    m, dim = cands.shape
    for c in range(m):
        s = 0.0
        for k in range(dim):
            d = cands[c, k] - center[k]
            s += d * d
        if not math.sqrt(s) < eps:
            continue
        good = True
        for q in range(nbrs.shape[0]):
            d = math.sqrt(_sqdist(cands, c, nbrs, q))
            if band_lo <= d <= band_hi:
                good = False
                break
        if good:
            return c
    return -1


def iso_search(n, a_indptr, a_indices, a_cls, anchor, b_indptr, b_indices, b_cls,
               bucket, cls_lo, cls_hi, max_steps):
    """Lexicographically first isomorphism between two class-labelled graphs.

    Source vertices are assigned in index order 0..n-1; candidates are tried
    in increasing target index, so the first complete assignment is the
    lexicographically smallest image tuple.  ``anchor[k]`` is an earlier
    neighbour of ``k`` (or -1), whose image restricts the candidates of
    ``k`` to its target neighbours.  Without an anchor, candidates come from
    ``bucket[cls_lo[k]:cls_hi[k]]`` (target vertices of the same class,
    ascending).  Returns (map, steps); map is all -1 when no isomorphism
    exists or ``max_steps`` (> 0) ran out, in which case steps == -1.
    """
    fmap = np.full(n, -1, dtype=np.int64)
    inv = np.full(n, -1, dtype=np.int64)
    ptr = np.zeros(n + 1, dtype=np.int64)
    stamp = np.zeros(n, dtype=np.int64)
    tick = 0
    steps = 0
    if n == 0:
        return fmap, steps
    k = 0
    ptr[0] = b_indptr[fmap[anchor[0]]] if anchor[0] >= 0 else cls_lo[0]
    while k >= 0:
        if k == n:
            return fmap, steps
        u = anchor[k]
        if u >= 0:
            base = fmap[u]
            hi = b_indptr[base + 1]
        else:
            hi = cls_hi[k]
        j = ptr[k]
        found = -1
        while j < hi:
            if u >= 0:
                w = b_indices[j]
            else:
                w = bucket[j]
            j += 1
            steps += 1
            if max_steps > 0 and steps > max_steps:
                return np.full(n, -1, dtype=np.int64), -1
            if inv[w] >= 0 or b_cls[w] != a_cls[k]:
                continue
            # images of k's earlier neighbours must be exactly w's mapped neighbours
            tick += 1
            n_mapped = 0
            for e in range(b_indptr[w], b_indptr[w + 1]):
                y = b_indices[e]
                if inv[y] >= 0:
                    stamp[y] = tick
                    n_mapped += 1
            n_earlier = 0
            ok = True
            for e in range(a_indptr[k], a_indptr[k + 1]):
                x = a_indices[e]
                if x < k:
                    n_earlier += 1
                    if stamp[fmap[x]] != tick:
                        ok = False
                        break
            if ok and n_earlier == n_mapped:
                found = w
                break
        ptr[k] = j
        if found >= 0:
            fmap[k] = found
            inv[found] = k
            k += 1
            if k < n:
                a = anchor[k]
                ptr[k] = b_indptr[fmap[a]] if a >= 0 else cls_lo[k]
        else:
            k -= 1
            if k >= 0:
                inv[fmap[k]] = -1
                fmap[k] = -1
    return fmap, steps
