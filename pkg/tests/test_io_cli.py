import json

import jsonschema
import numpy as np
import pytest

from repnet import cli
from repnet.config import ConfigError, RunConfig, default_config_text, load_config, parse_config
from repnet.graph_space import GraphError, cycle_graph, path_graph
from repnet.io import dumps, read_graph, read_points, sha256, write_graph, write_points

SMALL = ["--box", "0,300"]


# formats ------------------------------------------------------------------

def test_points_round_trip_exactly(tmp_path):
    pts = np.random.default_rng(1).uniform(-5, 5, (50, 3))
    pts[0, 0] = 0.1 + 0.2
    write_points(tmp_path / "p.csv", pts)
    back = read_points(tmp_path / "p.csv")
    assert back.shape == (50, 3) and np.array_equal(back, pts)
    (tmp_path / "bad.csv").write_text("1,2\n")
    with pytest.raises(ValueError):
        read_points(tmp_path / "bad.csv")


def test_graph_round_trip(tmp_path):
    g = path_graph(7, colors=[3, 1, 4, 1, 5, 9, 2])
    write_graph(tmp_path / "g.txt", g)
    text = (tmp_path / "g.txt").read_text()
    assert "v 0 3" in text and "e 0 1" in text and "b 6" in text
    h = read_graph(tmp_path / "g.txt")
    assert h.colors.tolist() == g.colors.tolist()
    assert h.edges().tolist() == g.edges().tolist()
    assert h.boundary.tolist() == g.boundary.tolist()
    c = cycle_graph(5)
    write_graph(tmp_path / "c.txt", c)
    assert read_graph(tmp_path / "c.txt").boundary is None


def test_graph_reader_rejects_malformed_files(tmp_path):
    (tmp_path / "a.txt").write_text("v 0 1\nv 2 1\n")
    with pytest.raises(GraphError):
        read_graph(tmp_path / "a.txt")
    (tmp_path / "b.txt").write_text("v 0 1\nx 1\n")
    with pytest.raises(GraphError):
        read_graph(tmp_path / "b.txt")


def test_json_is_canonical():
    a = dumps({"b": np.float64(np.inf), "a": np.arange(3), "c": (np.int64(2), np.bool_(True))})
    assert a == dumps({"c": [2, True], "a": [0, 1, 2], "b": float("inf")})
    assert json.loads(a) == {"a": [0, 1, 2], "b": "inf", "c": [2, True]}


# configuration ------------------------------------------------------------

def test_default_config_parses():
    cfg = load_config()
    assert cfg == RunConfig()
    assert parse_config(default_config_text()).rho is None


@pytest.mark.parametrize("text", ["sigma = 2.0", "epsilon = 0.6", "order = shuffled", "nonsense = 1",
                                  "tau = abc", "lambda0 = 1.5", "box = 0,1,2", "depth = 0"])
def test_bad_config_is_rejected(text):
    with pytest.raises(ConfigError):
        parse_config(default_config_text() + "\n" + text + "\n")


def test_overrides_win():
    cfg = load_config(None, {"sigma": 3.0, "rho": "0.001"})
    assert cfg.sigma == 3.0 and cfg.rho == 0.001


def test_config_errors_exit_2(tmp_path, capsys):
    assert cli.main(["net", "--out", str(tmp_path), "--sigma", "2.0"]) == cli.EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err
    assert cli.main(["net", "--out", str(tmp_path), "--config", str(tmp_path / "missing.cfg")]) == cli.EXIT_CONFIG


# commands -----------------------------------------------------------------

def report(out):
    rep = json.loads((out / "report.json").read_text())
    jsonschema.validate(rep, cli.load_schema())
    man = json.loads((out / "manifest.json").read_text())
    for name, digest in man["files"].items():
        assert sha256(out / name) == digest
    assert "timing.json" not in man["files"]
    return rep


def test_net_is_deterministic_and_verifiable(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["net", "--out", str(a), *SMALL]) == 0
    assert cli.main(["net", "--out", str(b), *SMALL]) == 0
    assert (a / "manifest.json").read_bytes() == (b / "manifest.json").read_bytes()
    rep = report(a)
    assert rep["ok"] and rep["command"] == "net"
    v = tmp_path / "v"
    code = cli.main(["verify", "--out", str(v), *SMALL, "--points", str(a / "points.csv"),
                     "--certificate", str(a / "net_certificate.json")])
    assert code == 0 and report(v)["checks"]["verify.covering"]


def test_seed_changes_the_output(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    cli.main(["net", "--out", str(a), *SMALL, "--order", "random"])
    cli.main(["net", "--out", str(b), *SMALL, "--order", "random", "--seed", "7"])
    assert (a / "points.csv").read_bytes() != (b / "points.csv").read_bytes()


def test_perturb_and_graphify(tmp_path):
    net, per, gr = tmp_path / "net", tmp_path / "per", tmp_path / "gr"
    assert cli.main(["net", "--out", str(net), *SMALL]) == 0
    assert cli.main(["perturb", "--out", str(per), *SMALL, "--points", str(net / "points.csv")]) == 0
    rep = report(per)
    assert all(rep["checks"].values())
    rows = [ln.split(",") for ln in (per / "pair_histogram.csv").read_text().splitlines()[1:]]
    assert rows
    assert cli.main(["graphify", "--out", str(gr), *SMALL, "--points", str(per / "perturbed.csv")]) == 0
    rep = report(gr)
    assert rep["ok"]
    g = read_graph(gr / "graph.txt")
    assert g.is_connected()


def test_schedule_command(tmp_path):
    assert cli.main(["schedule", "--out", str(tmp_path), "--depth", "3"]) == 0
    obj = json.loads((tmp_path / "schedule.json").read_text())
    assert obj["schedule"]["r"] == [13, 2602, 397621]
    assert report(tmp_path)["checks"]["schedule.conditions"]


def test_gdist_and_analyze(tmp_path, capsys):
    g = cycle_graph(60, colors=np.arange(60) % 3)
    write_graph(tmp_path / "g.txt", g)
    out = tmp_path / "d"
    assert cli.main(["gdist", "--out", str(out), "--graph", str(tmp_path / "g.txt"), "--x", "0", "--y", "1"]) == 0
    assert json.loads((out / "gdist.json").read_text())["distance"] == 2.0
    out = tmp_path / "an"
    code = cli.main(["analyze", "--out", str(out), "--graph", str(tmp_path / "g.txt"), "--p", "0",
                     "--omega-radius", "20", "--persistence", "10"])
    assert code == 0
    an = json.loads((out / "analysis.json").read_text())
    # omega within the 20-window is {0, 3, ..., 18} plus {42, ..., 57}; vertex 20 is 2 from 18
    assert an["2"]["omega_size"] == 13
    assert an["2"]["repetitivity_radius"] == 2.0
    assert json.loads((out / "persistence.json").read_text())["summary"]["pairs"] == 90


def test_hierarchy_command_on_a_cycle(tmp_path):
    write_graph(tmp_path / "g.txt", cycle_graph(400))
    sch = {"lambda0": 1.25, "lambda_minus1": 1.6, "r": [2, 8, 40], "s": [6, 24, 100], "t": [3, 10, 50],
           "lam": [1.25, 1.01, 1.0001], "omega": [0.0, 0.0, 0.0], "slack": 0.05}
    (tmp_path / "s.json").write_text(json.dumps({"schedule": sch}))
    out = tmp_path / "h"
    code = cli.main(["hierarchy", "--out", str(out), "--graph", str(tmp_path / "g.txt"), "--p", "0",
                     "--schedule", str(tmp_path / "s.json"), "--depth", "3"])
    rep = report(out)
    assert code == 0, rep["counterexamples"]
    col = (out / "level_coloring.csv").read_text()
    assert col
    ver = json.loads((out / "verification.json").read_text())
    assert ver


def test_construction_failure_exit_3(tmp_path):
    write_graph(tmp_path / "g.txt", path_graph(30, colors=np.arange(30)))
    out = tmp_path / "s"
    code = cli.main(["schedule", "--out", str(out), "--graph", str(tmp_path / "g.txt"), "--p", "15",
                     "--omega-radius", "14"])
    assert code == cli.EXIT_CONSTRUCTION
