import csv
import json
import math
import os
import subprocess
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import pytest

from xfpt import Network, Query, __version__
from xfpt.builders import chain, diamond, shifted_chain
from xfpt.cli import main
from xfpt.io import save_graph

GOLDEN = Path(__file__).parent / "golden"
SUBCOMMANDS = ["analyze", "theory", "exact", "simulate", "mortal", "ensemble"]


def schema(name):
    return json.loads(resources.files("xfpt").joinpath("schemas", f"{name}.json").read_text())


@pytest.fixture
def graphs(tmp_path):
    paths = {}
    for name, (net, q) in {"chain3": chain(3), "diamond": diamond(), "shifted": shifted_chain(2),
                           "edge": (Network.markov(2, [(0, 1, 2.0)]), Query.point(2, 0, [1]))}.items():
        paths[name] = tmp_path / f"{name}.json"
        save_graph(paths[name], net, q)
    return paths


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, name, *argv):
    code, out, err = run(capsys, name, *argv)
    assert code == 0, err
    doc = json.loads(out)
    jsonschema.validate(doc, schema(name))
    return doc


def test_analyze(capsys, graphs):
    doc = run_json(capsys, "analyze", graphs["chain3"])
    assert doc["d"] == 3 and doc["t_min"] == 0 and doc["path_count"] == 1
    m = doc["manifest"]
    assert m["version"] == __version__ and len(m["input_sha256"]) == 64
    assert m["argv"][:2] == ["xfpt", "analyze"]
    doc = run_json(capsys, "analyze", graphs["diamond"], "--paths", 5)
    assert [p["nodes"] for p in doc["paths"]] == [[0, 1, 3], [0, 2, 3]]


def test_theory(capsys, graphs):
    doc = run_json(capsys, "theory", graphs["chain3"], "--N", "1e6", "--moments", "1,2")
    assert doc["mean"] == pytest.approx(math.gamma(4 / 3) / (1e6 / 6) ** (1 / 3), rel=1e-11)
    assert doc["regime_threshold"] == pytest.approx(6.0)
    assert set(doc["moments"]) == {"1", "2"}
    doc = run_json(capsys, "theory", graphs["shifted"], "--N", 100)
    assert doc["t_min"] == 2.0 and doc["regime_threshold"] is None


def test_exact_moment(capsys, graphs):
    doc = run_json(capsys, "exact", graphs["edge"], "--N", 10)
    assert doc["value"] == pytest.approx(1 / 20, rel=1e-10)


def test_exact_curve(capsys, graphs, tmp_path):
    code, out, err = run(capsys, "exact", graphs["chain3"], "--N", 2, "--curve", "0:2:5")
    assert code == 0
    rows = list(csv.reader(out.splitlines()))
    assert rows[0] == ["t", "S", "cdf_TkN", "pdf_TkN"] and len(rows) == 6
    assert rows[1] == ["0", "1", "0", "0"]
    jsonschema.validate(json.loads(err), schema("exact"))
    dest = tmp_path / "curve.csv"
    doc = run_json(capsys, "exact", graphs["chain3"], "--N", 2, "--curve", "0:2:5", "--out", dest)
    assert doc["rows"] == 5 and dest.read_text().splitlines()[1:] == out.splitlines()[1:]


def test_simulate(capsys, graphs, tmp_path):
    ecdf = tmp_path / "ecdf.csv"
    args = ["simulate", graphs["edge"], "--N", 100, "--replicates", 2000, "--seed", 3,
            "--ecdf-out", ecdf, "--ecdf-grid", "0:0.02:11", "--moment", 2]
    doc = run_json(capsys, *args)
    est = doc["estimate"]
    assert abs(est["mean"] - 1 / 200) < 4 * est["stderr"]
    assert doc["manifest"]["seed"] == 3 and "moment" in doc
    rows = list(csv.reader(open(ecdf)))
    assert rows[0] == ["t", "ecdf"] and len(rows) == 12
    again = run_json(capsys, *args)
    assert again["estimate"] == doc["estimate"]


def test_simulate_mortal(capsys, graphs):
    doc = run_json(capsys, "simulate", graphs["edge"], "--N", 20000, "--replicates", 2, "--gamma", 1.0)
    assert abs(doc["estimate"]["mean"] - 1 / 3) < 4 * doc["estimate"]["stderr"]


def test_mortal_routes(capsys, graphs):
    exact = run_json(capsys, "mortal", graphs["edge"], "--gamma", 3.0)
    assert exact["route"] == "exact" and exact["value"] == pytest.approx(0.2, rel=1e-10)
    asym = run_json(capsys, "mortal", graphs["chain3"], "--gamma", 100, "--asymptotic")
    assert asym["value"] == pytest.approx(0.03, rel=1e-12) and asym["d"] == 3
    mc = run_json(capsys, "mortal", graphs["edge"], "--gamma", 3.0, "--mc", "--N", 50000, "--replicates", 2)
    assert abs(mc["value"] - 0.2) < 4 * mc["stderr"]
    gen = run_json(capsys, "mortal", graphs["shifted"], "--gamma", 10)
    assert gen["route"] == "asymptotic" and gen["value"] == pytest.approx(2 + 2 / 10)


def test_ensemble(capsys, tmp_path):
    out = tmp_path / "ens"
    doc = run_json(capsys, "ensemble", "--V", 60, "--distance", 2, "--seed", 4, "--Ngrid", "10:1e4:4",
                   "--out", out)
    assert doc["edges"] == 300 and doc["distance"] == 2
    assert [r["N"] for r in doc["table"]] == [10, 100, 1000, 10000]
    assert {p.name for p in out.iterdir()} == {"graph.json", "convergence.csv", "density.csv"}
    first = (out / "graph.json").read_bytes()
    run_json(capsys, "ensemble", "--V", 60, "--distance", 2, "--seed", 4, "--Ngrid", "10:1e4:4", "--out", out)
    assert (out / "graph.json").read_bytes() == first
    head = next(csv.reader(open(out / "density.csv")))
    assert head == ["z", "density_10", "density_100", "density_1000", "density_10000", "weibull_density"]


# -- seeds -------------------------------------------------------------------


def test_seed_precedence(capsys, graphs, monkeypatch):
    base = ["simulate", graphs["edge"], "--N", 10, "--replicates", 50]
    monkeypatch.delenv("XFPT_SEED", raising=False)
    assert run_json(capsys, *base)["manifest"]["seed"] == 0
    monkeypatch.setenv("XFPT_SEED", "77")
    from_env = run_json(capsys, *base)
    assert from_env["manifest"]["seed"] == 77
    assert run_json(capsys, *base, "--seed", 5)["manifest"]["seed"] == 5
    monkeypatch.delenv("XFPT_SEED")
    explicit = run_json(capsys, *base, "--seed", 77)
    assert explicit["estimate"] == from_env["estimate"]
    monkeypatch.setenv("XFPT_SEED", "abc")
    code, _, err = run(capsys, *base)
    assert code == 2 and json.loads(err)["error"] == "bad_seed"


# -- errors ------------------------------------------------------------------


def error_doc(err):
    doc = json.loads(err)
    jsonschema.validate(doc, schema("error"))
    return doc


def test_start_on_target(capsys, tmp_path):
    p = tmp_path / "bad.json"
    save_graph(p, Network.markov(2, [(0, 1, 1.0)]), Query.point(2, 1, [1]))
    code, out, err = run(capsys, "analyze", p)
    assert code == 2 and out == ""
    doc = error_doc(err)
    assert doc["error"] == "start_on_target"
    assert any(v["code"] == "start_on_target" for v in doc["violations"])


@pytest.mark.parametrize("argv", [
    ["exact", "--N", "-5"],
    ["exact", "g.json", "--N", "-5"],
    ["theory", "g.json", "--N", "3", "--k", "4"],
    ["simulate", "g.json"],
    ["frobnicate"],
    [],
    ["mortal", "g.json", "--gamma", "1", "--exact", "--mc"],
    ["ensemble", "--V", "100", "--distance", "3", "--out", "x", "--Ngrid", "1:2"],
])
def test_usage_errors(capsys, argv, graphs, monkeypatch):
    monkeypatch.chdir(graphs["chain3"].parent)
    (graphs["chain3"].parent / "g.json").write_bytes(graphs["chain3"].read_bytes())
    code, out, err = run(capsys, *argv)
    assert code == 64 and out == "" and "error:" in err


def test_general_mode_exact_is_rejected(capsys, graphs):
    code, _, err = run(capsys, "exact", graphs["shifted"], "--N", 10)
    assert code == 2 and error_doc(err)["error"] == "mode_not_supported"


def test_missing_and_malformed_files(capsys, tmp_path):
    code, _, err = run(capsys, "analyze", tmp_path / "nope.json")
    assert code == 2 and error_doc(err)["error"] == "file_not_found"
    p = tmp_path / "broken.json"
    p.write_text("[")
    code, _, err = run(capsys, "analyze", p)
    assert code == 2 and error_doc(err)["error"] == "bad_graph_file"


def test_numerical_failure_exit_code(capsys, tmp_path):
    p = tmp_path / "long.json"
    save_graph(p, *chain(200))
    code, _, err = run(capsys, "mortal", p, "--gamma", 1e6)
    assert code == 3 and error_doc(err)["error"] == "null_conditioning"
    code, _, err = run(capsys, "mortal", p, "--gamma", 1e6, "--mc", "--N", 1000, "--replicates", 1)
    assert code == 3 and error_doc(err)["error"] == "null_conditioning"


def test_trapped_walkers_exit_code(capsys, tmp_path):
    p = tmp_path / "trap.json"
    save_graph(p, Network.markov(4, [(0, 1, 1.0), (0, 2, 1.0), (1, 3, 1.0)]), Query.point(4, 0, [3]))
    code, _, err = run(capsys, "simulate", p, "--N", 100, "--replicates", 5)
    assert code == 3 and error_doc(err)["error"] == "trapped_walker"
    doc = run_json(capsys, "simulate", p, "--N", 100, "--replicates", 5, "--time-cap", 50)
    assert doc["stats"]["trapped"] > 0
    code, _, err = run(capsys, "exact", p, "--N", 1)
    assert code == 3 and error_doc(err)["error"] == "infinite_moment"


# -- help --------------------------------------------------------------------


def help_text(capsys, monkeypatch, *argv):
    monkeypatch.setenv("COLUMNS", "80")
    code, out, _ = run(capsys, *argv, "--help")
    assert code == 0
    return out


@pytest.mark.parametrize("cmd", ["", *SUBCOMMANDS])
def test_help_matches_golden(capsys, monkeypatch, cmd):
    argv = [cmd] if cmd else []
    text = help_text(capsys, monkeypatch, *argv)
    path = GOLDEN / f"help_{cmd or 'main'}.txt"
    if os.environ.get("XFPT_UPDATE_GOLDEN"):
        path.write_text(text)
    assert text == path.read_text()


@pytest.mark.parametrize("cmd", SUBCOMMANDS)
def test_help_lists_every_flag(capsys, monkeypatch, cmd):
    from xfpt.cli import build_parser
    sub = build_parser()._subparsers._group_actions[0].choices[cmd]
    text = help_text(capsys, monkeypatch, cmd)
    for action in sub._actions:
        for flag in action.option_strings:
            assert flag in text


def test_console_script(tmp_path):
    p = tmp_path / "g.json"
    save_graph(p, *chain(3))
    res = subprocess.run([sys.executable, "-m", "xfpt.cli", "analyze", str(p)], capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["d"] == 3
    res = subprocess.run([sys.executable, "-m", "xfpt.cli", "exact", "--N", "-5"], capture_output=True, text=True)
    assert res.returncode == 64
