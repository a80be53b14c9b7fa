"""Text formats for point clouds, graphs and reports.

Points: CSV with a ``# dim=d`` header and one row per point, floats in
``repr`` form so a round trip is exact; the row index is the point id.
Graphs: one ``v <id> <color>`` line per vertex, then ``e <u> <v>`` lines
(u < v); ``b <id>`` marks a vertex on the window boundary.  Blank lines
and ``#`` comments are ignored.

JSON is written with sorted keys and non-finite floats as strings, so the
same data always gives the same bytes.
"""
from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .graph_space.graph import ColoredGraph, GraphError


def write_points(path, pts: np.ndarray) -> None:
    pts = np.asarray(pts, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    lines = [f"# dim={pts.shape[1]}"]
    lines += [",".join(repr(float(c)) for c in row) for row in pts]
    Path(path).write_text("\n".join(lines) + "\n")


def read_points(path) -> np.ndarray:
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("# dim="):
        raise ValueError(f"{path}: missing '# dim=' header")
    dim = int(text[0].split("=", 1)[1])
    rows = [[float(c) for c in ln.split(",")] for ln in text[1:] if ln.strip()]
    pts = np.array(rows, dtype=float).reshape(-1, dim)
    return pts


def write_graph(path, g: ColoredGraph) -> None:
    out = ["# repnet graph"]
    out += [f"v {v} {int(c)}" for v, c in enumerate(g.colors)]
    out += [f"e {u} {v}" for u, v in g.edges()]
    if g.boundary is not None:
        out += [f"b {v}" for v in np.flatnonzero(g.boundary)]
    Path(path).write_text("\n".join(out) + "\n")


def read_graph(path) -> ColoredGraph:
    """Vertex ids must be 0..n-1 (in any order)."""
    verts, edges, bnd = {}, [], []
    for ln in Path(path).read_text().splitlines():
        parts = ln.split()
        if not parts or parts[0].startswith("#"):
            continue
        try:
            if parts[0] == "v" and len(parts) == 3:
                verts[int(parts[1])] = int(parts[2])
            elif parts[0] == "e" and len(parts) == 3:
                edges.append((int(parts[1]), int(parts[2])))
            elif parts[0] == "b" and len(parts) == 2:
                bnd.append(int(parts[1]))
            else:
                raise ValueError
        except ValueError:
            raise GraphError(f"{path}: malformed line {ln[:40]!r}") from None
    n = len(verts)
    if sorted(verts) != list(range(n)):
        raise GraphError(f"{path}: vertex ids must be 0..n-1")
    colors = np.array([verts[v] for v in range(n)], dtype=np.int64)
    boundary = None
    if bnd:
        boundary = np.zeros(n, dtype=bool)
        boundary[np.array(bnd, dtype=np.int64)] = True
    return ColoredGraph.from_edges(n, np.array(edges, dtype=np.int64).reshape(-1, 2), colors, boundary=boundary)


def write_delone_sidecar(path, tau: float, eta: float, sigma=None, rho=None, epsilon=None) -> None:
    write_json(path, {"tau": tau, "eta": eta, "sigma": sigma, "rho": rho, "epsilon": epsilon})


def plain(obj):
    """JSON-ready copy: numpy scalars and arrays to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else ("inf" if f > 0 else "-inf" if f < 0 else "nan")
    return obj


def dumps(obj) -> str:
    return json.dumps(plain(obj), sort_keys=True, indent=1) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj))


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
