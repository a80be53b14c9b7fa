"""Command line entry point: ``repnet <command> [--config FILE] [overrides] --out DIR``.

Every command writes its artifacts, a ``report.json`` and a
``manifest.json`` (sha256 of each artifact) into the output directory.
Wall-clock times go to ``timing.json``, which the manifest leaves out so
that reruns with the same seed give byte-identical manifests.

All randomness comes from the config seed, fed to numpy's SeedSequence and
PCG64; each stage draws from its own spawned child stream.

Exit codes: 0 all checks passed, 2 configuration error, 3 construction
failure, 4 a verification check failed.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
from scipy.spatial import cKDTree

from . import __version__
from ._accel import backend_name
from .config import ConfigError, RunConfig, load_config
from .delone import (CoronaGapParams, DeloneError, DeloneSet, PointCloud, band_pairs, corona_gap_perturb,
                     delone_to_graph, generate_delone, graph_claims, measure_covering_radius,
                     perturbation_certificate)
from .graph_space import GraphError, NotRepetitive, gstar_distance, persistence_depth, repetitivity_radius
from .graph_space.patterns import agreement_radius, omega_set
from .hierarchy import (Hierarchy, HierarchyError, Schedule, ScheduleError, check_conditions, density_report,
                        hierarchy_report, level_coloring, limit_levels, make_schedule, verify_level)
from .io import (dumps, read_graph, read_points, sha256, write_delone_sidecar, write_graph, write_json,
                 write_points)
from .metric_core import MetricError, NetCertificate, is_k_separated

EXIT_OK, EXIT_CONFIG, EXIT_CONSTRUCTION, EXIT_VERIFY = 0, 2, 3, 4
SCHEMA_VERSION = 1
_CONSTRUCTION_ERRORS = (DeloneError, GraphError, HierarchyError, ScheduleError, MetricError)


class StageError(RuntimeError):
    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"stage {stage}: {exc}")
        self.stage = stage


class Run:
    """Collects artifacts, checks and measurements for one command invocation."""

    def __init__(self, command: str, out: str | Path, config: dict):
        self.command = command
        self.dir = Path(out)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.config = config
        self.artifacts: list[str] = []
        self.checks: dict[str, bool] = {}
        self.measured: dict = {}
        self.counterexamples: dict = {}
        self.timing: dict[str, float] = {}
        self._t0 = time.perf_counter()

    def path(self, name: str) -> Path:
        if name not in self.artifacts:
            self.artifacts.append(name)
        return self.dir / name

    def check(self, name: str, ok, counterexample=None) -> bool:
        self.checks[name] = bool(ok)
        if not ok and counterexample is not None:
            self.counterexamples[name] = counterexample
        return bool(ok)

    def stage(self, name: str, fn, *args):
        t = time.perf_counter()
        try:
            return fn(*args)
        except _CONSTRUCTION_ERRORS as exc:
            raise StageError(name, exc) from exc
        finally:
            self.timing[name] = time.perf_counter() - t

    def report(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "command": self.command, "version": __version__,
                "config": self.config, "checks": dict(sorted(self.checks.items())),
                "measured": self.measured, "counterexamples": self.counterexamples,
                "ok": all(self.checks.values()), "artifacts": sorted(self.artifacts)}

    def finish(self) -> int:
        rep = self.report()
        jsonschema.validate(json.loads(dumps(rep)), load_schema())
        write_json(self.path("report.json"), rep)
        files = {name: sha256(self.dir / name) for name in sorted(self.artifacts)}
        write_json(self.dir / "manifest.json", {"schema_version": SCHEMA_VERSION, "files": files})
        self.timing["total"] = time.perf_counter() - self._t0
        write_json(self.dir / "timing.json", {"backend": backend_name(), "seconds": self.timing})
        return EXIT_OK if rep["ok"] else EXIT_VERIFY


def load_schema() -> dict:
    return json.loads(resources.files("repnet").joinpath("data/report.schema.json").read_text())


def _streams(seed: int) -> dict:
    names = ("net", "frozen")
    kids = np.random.SeedSequence(seed).spawn(len(names))
    return {n: int(k.generate_state(1, dtype=np.uint64)[0]) for n, k in zip(names, kids)}


# -- stages ---------------------------------------------------------------

def stage_net(cfg: RunConfig, run: Run) -> DeloneSet:
    box = cfg.box_obj()
    seed = _streams(cfg.seed)["net"] if cfg.order == "random" else None
    X = generate_delone(box, cfg.tau, seed=seed)
    eta = measure_covering_radius(X.points, box)
    X = X.with_eta(min(eta, X.eta))
    write_points(run.path("points.csv"), X.points)
    write_delone_sidecar(run.path("points.json"), X.tau, X.eta)
    run.path("net_certificate.json").write_text(X.certificate().to_json() + "\n")
    run.measured["net"] = {"points": X.n, "separation": X.tau, "covering_radius": X.eta}
    run.check("net.separated", is_k_separated(X.space(), range(X.n), cfg.tau))
    return X


def _frozen_set(X: DeloneSet, count: int, lo: float, hi: float, seed: int) -> list[int]:
    """Up to ``count`` points, drawn in seeded order, with no mutual distance in [lo, hi]."""
    order = np.random.default_rng(seed).permutation(X.n)
    chosen: list[int] = []
    pts = X.points
    for v in order:
        if len(chosen) == count:
            break
        d = np.sqrt(((pts[chosen] - pts[v]) ** 2).sum(axis=1)) if chosen else np.empty(0)
        if not np.any((d >= lo) & (d <= hi)):
            chosen.append(int(v))
    return sorted(chosen)


def _pair_histogram(before: np.ndarray, after: np.ndarray, sigma: float, rho: float) -> str:
    """Exact pair-distance counts on open bins and on the bin edges themselves."""
    top = sigma + 1.0
    edges = np.unique(np.concatenate([np.linspace(0.0, top, 41), [sigma - rho, sigma + rho]]))

    def counts(pts):
        if len(pts) < 2:
            return np.zeros(2 * edges.size - 1, dtype=np.int64)
        pairs = cKDTree(pts).query_pairs(top, output_type="ndarray")
        d = np.sqrt(((pts[pairs[:, 0]] - pts[pairs[:, 1]]) ** 2).sum(axis=1)) if pairs.size else np.empty(0)
        k = np.searchsorted(edges, d, side="left")
        on_edge = (k < edges.size) & (edges[np.minimum(k, edges.size - 1)] == d)
        slot = np.where(on_edge, 2 * k, 2 * k - 1)
        return np.bincount(slot[(slot >= 0) & (slot < 2 * edges.size - 1)], minlength=2 * edges.size - 1)

    cb, ca = counts(before), counts(after)
    rows = ["lo,hi,kind,before,after"]
    for s in range(2 * edges.size - 1):
        if s % 2 == 0:
            e = repr(float(edges[s // 2]))
            rows.append(f"{e},{e},point,{cb[s]},{ca[s]}")
        else:
            rows.append(f"{float(edges[s // 2])!r},{float(edges[s // 2 + 1])!r},open,{cb[s]},{ca[s]}")
    return "\n".join(rows) + "\n"


def stage_perturb(cfg: RunConfig, run: Run, X: DeloneSet) -> DeloneSet:
    params = CoronaGapParams.from_budget(cfg.dim, cfg.tau, cfg.sigma, cfg.epsilon, cfg.rho)
    lo, hi = params.sigma - params.rho, params.sigma + params.rho
    A = _frozen_set(X, cfg.frozen, lo, hi, _streams(cfg.seed)["frozen"])
    Xp, pert = corona_gap_perturb(X, params, A)
    cert = perturbation_certificate(X, Xp, pert)
    eta_after = measure_covering_radius(Xp.points, X.window)
    disp = np.sqrt(((Xp.points - X.points) ** 2).sum(axis=1))
    bad_band = band_pairs(Xp.points, lo, hi)
    write_points(run.path("perturbed.csv"), Xp.points)
    write_delone_sidecar(run.path("perturbed.json"), Xp.tau, Xp.eta, params.sigma, params.rho, params.epsilon)
    write_json(run.path("perturbation.json"), {
        "epsilon": pert.epsilon, "sigma": params.sigma, "rho": params.rho, "P_epsilon": params.P_epsilon,
        "frozen": A, "moved": pert.meta.get("moved"), "max_displacement": pert.meta.get("max_displacement"),
        "certificate": {"separation": cert.separation, "covering_radius": cert.covering_radius}})
    run.path("pair_histogram.csv").write_text(_pair_histogram(X.points, Xp.points, params.sigma, params.rho))
    run.measured["perturb"] = {"rho": params.rho, "P_epsilon": params.P_epsilon, "frozen": len(A),
                               "moved": pert.meta.get("moved"), "max_displacement": float(disp.max()),
                               "covering_radius_after": eta_after, "band_pairs_before":
                                   int(band_pairs(X.points, lo, hi).shape[0])}
    run.check("perturb.frozen_unmoved", np.all(disp[A] == 0) if A else True)
    run.check("perturb.displacement_below_epsilon", np.all(disp < cfg.epsilon))
    run.check("perturb.separated", is_k_separated(Xp.space(), range(Xp.n), cfg.tau - 2 * cfg.epsilon))
    run.check("perturb.relatively_dense", eta_after <= X.eta + cfg.epsilon)
    run.check("perturb.band_empty", bad_band.shape[0] == 0, bad_band[:5].tolist())
    run.check("perturb.eta_within_config", Xp.eta <= cfg.eta)
    return Xp


def stage_graph(cfg: RunConfig, run: Run, Xp: DeloneSet):
    G = delone_to_graph(Xp, cfg.sigma)
    claims = graph_claims(Xp, G, cfg.sigma, cfg.graph_r_max, tau=Xp.tau)
    write_graph(run.path("graph.txt"), G)
    run.measured["graph"] = {"vertices": G.n, "edges": G.num_edges, "max_degree": claims.max_degree,
                             "degree_bound": claims.degree_bound, "checked_vertices": claims.checked_vertices}
    run.check("graph.connected", claims.connected)
    run.check("graph.degree_bound", claims.max_degree <= claims.degree_bound)
    run.check("graph.hop_ball_in_euclidean_ball", claims.hop_in_euclid, claims.counterexamples)
    run.check("graph.euclidean_ball_in_hop_ball", claims.euclid_in_hop, claims.counterexamples)
    return G


def center_vertex(Xp: DeloneSet) -> int:
    c = 0.5 * (np.array(Xp.window.lo) + np.array(Xp.window.hi))
    d = ((Xp.points - c) ** 2).sum(axis=1)
    return int(np.flatnonzero(d == d.min())[0])


def deepest_vertex(G) -> int:
    b = G.boundary_distance()
    return int(np.flatnonzero(b == b.max())[0])


def omega_probe(G, p: int, radius: int):
    """omega_i measured on the vertices within ``radius`` hops of p whose r_i-balls are faithful."""
    near, _ = G.bfs(p, radius)

    def probe(i, r):
        if r > G.window_radius(p):
            return math.inf
        window = near[G.interior(r)[near]]
        if window.size == 0:
            return math.inf
        try:
            return repetitivity_radius(G, p, r, window)
        except NotRepetitive:
            return math.inf
    return probe


def stage_schedule(cfg: RunConfig, run: Run, G, p: int) -> Schedule:
    sch = make_schedule(cfg.lambda0, omega_probe(G, p, cfg.omega_radius), cfg.depth)
    write_json(run.path("schedule.json"), {"schedule": sch.to_dict(),
                                           "checks": [c.__dict__ for c in check_conditions(sch)]})
    checks = check_conditions(sch, sch.slack)
    run.check("schedule.conditions", all(c.ok for c in checks),
              [c.__dict__ for c in checks if not c.ok])
    run.measured["schedule"] = {"r": sch.r, "s": sch.s, "t": sch.t, "lambda": sch.lam, "omega": sch.omega,
                                "min_slack": min(c.slack for c in checks)}
    return sch


def stage_hierarchy(cfg: RunConfig, run: Run, G, p: int, sch: Schedule):
    h = Hierarchy(G, p, sch)
    built = h.build(cfg.depth)
    write_json(run.path("hierarchy.json"), hierarchy_report(h, include_maps=True))
    levels = {}
    for (i, j) in built:
        rep = verify_level(h.levels[(i, j)], h)
        levels[f"{i},{j}"] = rep
        bad = {k: v["counterexamples"] for k, v in rep["clauses"].items() if not v["ok"]}
        run.check(f"hierarchy.level_{i}_{j}", rep["ok"], bad or None)
    limits, density = {}, {}
    for i in sorted({a for a, _ in built}):
        try:
            limits[i] = limit_levels(h, i)
        except HierarchyError as exc:
            run.check(f"hierarchy.limit_{i}_coherent", False, str(exc))
            continue
        run.check(f"hierarchy.limit_{i}_coherent", True)
        d = density_report(h, limits[i])
        density[str(i)] = d
        run.check(f"hierarchy.density_{i}", d["ok"], d)
    coloring = level_coloring(h, limits)
    run.path("level_coloring.csv").write_text(
        "vertex,color\n" + "".join(f"{v},{c}\n" for v, c in enumerate(coloring.tolist())))
    write_json(run.path("verification.json"), {"levels": levels, "density": density})
    run.measured["hierarchy"] = {"base_point": p, "window_radius": int(h.window_radius),
                                 "built": [list(b) for b in built], "refused": h.refused,
                                 "sizes": {k: v["sizes"] for k, v in levels.items()},
                                 "density": density}
    return h, coloring


def stage_analyze(cfg: RunConfig, run: Run, G, p: int, coloring=None) -> dict:
    H = G if coloring is None else G.with_colors(coloring)
    near, _ = G.bfs(p, cfg.omega_radius)
    out = {}
    for R in cfg.radii():
        window = near[H.interior(R)[near]]
        if window.size == 0:
            out[str(R)] = {"window": 0}
            continue
        om = omega_set(H, p, R, window)
        try:
            w = repetitivity_radius(H, p, R, window)
        except NotRepetitive:
            w = math.inf
        out[str(R)] = {"window": int(window.size), "omega_size": int(om.size), "repetitivity_radius": w}
    write_json(run.path("analysis.json"), out)
    run.measured["analysis"] = out
    return out


# -- commands ---------------------------------------------------------------

def _config(args) -> RunConfig:
    over = {k: getattr(args, k) for k in RunConfig.__dataclass_fields__ if getattr(args, k, None) is not None}
    return load_config(args.config, over)


def _delone_from_csv(path, cfg: RunConfig) -> DeloneSet:
    pts = read_points(path)
    box = cfg.box_obj()
    if pts.shape[1] != box.dim:
        raise ConfigError(f"{path}: points have dimension {pts.shape[1]}, box has {box.dim}")
    eta = measure_covering_radius(pts, box)
    return DeloneSet(PointCloud(pts, cfg.tau, eta), cfg.tau, eta, box)


def cmd_net(args, cfg: RunConfig) -> int:
    run = Run("net", args.out, cfg.echo())
    run.stage("net", stage_net, cfg, run)
    return run.finish()


def cmd_perturb(args, cfg: RunConfig) -> int:
    run = Run("perturb", args.out, cfg.echo())
    X = _delone_from_csv(args.points, cfg)
    run.stage("perturb", stage_perturb, cfg, run, X)
    return run.finish()


def cmd_graphify(args, cfg: RunConfig) -> int:
    run = Run("graphify", args.out, cfg.echo())
    X = _delone_from_csv(args.points, cfg)
    run.stage("graph", stage_graph, cfg, run, X)
    return run.finish()


def cmd_schedule(args, cfg: RunConfig) -> int:
    run = Run("schedule", args.out, cfg.echo())
    if args.graph:
        G = read_graph(args.graph)
        p = deepest_vertex(G) if args.p is None else args.p
        run.stage("schedule", stage_schedule, cfg, run, G, p)
    else:
        def build():
            sch = make_schedule(cfg.lambda0, args.omega, cfg.depth)
            checks = check_conditions(sch, sch.slack)
            write_json(run.path("schedule.json"), {"schedule": sch.to_dict(),
                                                   "checks": [c.__dict__ for c in check_conditions(sch)]})
            run.check("schedule.conditions", all(c.ok for c in checks))
            run.measured["schedule"] = {"r": sch.r, "s": sch.s, "t": sch.t, "lambda": sch.lam}
        run.stage("schedule", build)
    return run.finish()


def cmd_hierarchy(args, cfg: RunConfig) -> int:
    run = Run("hierarchy", args.out, cfg.echo())
    G = read_graph(args.graph)
    p = deepest_vertex(G) if args.p is None else args.p
    if args.schedule:
        obj = json.loads(Path(args.schedule).read_text())
        sch = Schedule.from_dict(obj.get("schedule", obj))
    else:
        sch = run.stage("schedule", stage_schedule, cfg, run, G, p)
    run.stage("hierarchy", stage_hierarchy, cfg, run, G, p, sch)
    return run.finish()


def cmd_analyze(args, cfg: RunConfig) -> int:
    run = Run("analyze", args.out, cfg.echo())
    G = read_graph(args.graph)
    p = deepest_vertex(G) if args.p is None else args.p
    run.stage("analyze", stage_analyze, cfg, run, G, p)
    if args.persistence:
        near, _ = G.bfs(p, cfg.omega_radius)
        R = max(cfg.radii() or [0])
        window = near[G.interior(R)[near]][:args.persistence]
        tab = persistence_depth(G, window, R)
        write_json(run.path("persistence.json"), {"vertices": tab.vertices, "R_max": tab.R_max,
                                                  "depth": tab.depth, "summary": tab.summary})
        run.measured["persistence"] = tab.summary
    return run.finish()


def cmd_gdist(args, cfg: RunConfig) -> int:
    run = Run("gdist", args.out, cfg.echo())
    g1 = read_graph(args.graph)
    g2 = read_graph(args.graph2) if args.graph2 else g1
    R, sat = agreement_radius(g1, args.x, g2, args.y, args.rmax)
    d = gstar_distance(g1, args.x, g2, args.y, args.rmax)
    write_json(run.path("gdist.json"), {"x": args.x, "y": args.y, "R_max": args.rmax, "agreement_radius": R,
                                        "saturated": sat, "distance": d})
    run.measured["gdist"] = {"agreement_radius": R, "saturated": sat, "distance": d}
    print(d)
    return run.finish()


def cmd_verify(args, cfg: RunConfig) -> int:
    run = Run("verify", args.out, cfg.echo())
    pts = read_points(args.points)
    cert = NetCertificate.from_json(Path(args.certificate).read_text())
    space = DeloneSet(PointCloud(pts, cfg.tau, math.inf), cfg.tau, math.inf, cfg.box_obj()).space()
    sub = list(cert.subset)
    if cert.separation is not None:
        run.check("verify.separated", is_k_separated(space, sub, cert.separation))
    cov = measure_covering_radius(pts[np.array(sub, dtype=np.int64)], cfg.box_obj())
    run.measured["verify"] = {"points": len(sub), "claimed_covering_radius": cert.covering_radius,
                              "measured_covering_bound": cov}
    run.check("verify.covering", cov <= cert.covering_radius * (1 + 1e-12))
    return run.finish()


def cmd_pipeline(args, cfg: RunConfig) -> int:
    run = Run("pipeline", args.out, cfg.echo())
    X = run.stage("net", stage_net, cfg, run)
    Xp = run.stage("perturb", stage_perturb, cfg, run, X)
    G = run.stage("graph", stage_graph, cfg, run, Xp)
    p = center_vertex(Xp)
    sch = run.stage("schedule", stage_schedule, cfg, run, G, p)
    _, coloring = run.stage("hierarchy", stage_hierarchy, cfg, run, G, p, sch)
    run.stage("analyze", stage_analyze, cfg, run, G, p, coloring)
    return run.finish()


COMMANDS = {"net": cmd_net, "perturb": cmd_perturb, "graphify": cmd_graphify, "schedule": cmd_schedule,
            "hierarchy": cmd_hierarchy, "analyze": cmd_analyze, "gdist": cmd_gdist, "verify": cmd_verify,
            "pipeline": cmd_pipeline}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="repnet", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value config file (default: the shipped one)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--workers", type=int, help="threads for verification scans")
        for name, f in RunConfig.__dataclass_fields__.items():
            if name == "out":
                continue
            kind = {"int": int, "float": float}.get(f.type, str)
            p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=kind, default=None)
        return p

    common(sub.add_parser("net", help="greedy Delone set in a box"))
    p = common(sub.add_parser("perturb", help="corona-gap perturbation of a point set"))
    p.add_argument("--points", required=True)
    p = common(sub.add_parser("graphify", help="distance-sigma graph and its metric claims"))
    p.add_argument("--points", required=True)
    p = common(sub.add_parser("schedule", help="parameter schedule"))
    p.add_argument("--graph", help="measure omega_i on this graph")
    p.add_argument("--p", type=int)
    p.add_argument("--omega", type=float, default=0.0, help="constant omega_i when no graph is given")
    p = common(sub.add_parser("hierarchy", help="build and verify the level hierarchy"))
    p.add_argument("--graph", required=True)
    p.add_argument("--p", type=int)
    p.add_argument("--schedule", help="schedule.json from the schedule command")
    p = common(sub.add_parser("analyze", help="pattern statistics around a vertex"))
    p.add_argument("--graph", required=True)
    p.add_argument("--p", type=int)
    p.add_argument("--persistence", type=int, default=0, help="size of the persistence window (0: skip)")
    p = common(sub.add_parser("gdist", help="pointed-ball agreement distance"))
    p.add_argument("--graph", required=True)
    p.add_argument("--graph2")
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--y", type=int, required=True)
    p.add_argument("--rmax", type=int, default=10)
    p = common(sub.add_parser("verify", help="re-check a net certificate"))
    p.add_argument("--points", required=True)
    p.add_argument("--certificate", required=True)
    common(sub.add_parser("pipeline", help="net, perturbation, graph, schedule, hierarchy and analysis"))
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.workers is not None:
        os.environ["REPNET_WORKERS"] = str(max(1, args.workers))
    try:
        cfg = _config(args)
    except (ConfigError, OSError) as exc:
        print(f"repnet: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"repnet: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        print(f"repnet: construction failed at {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION
    except _CONSTRUCTION_ERRORS as exc:
        print(f"repnet: construction failed: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION


if __name__ == "__main__":
    sys.exit(main())
