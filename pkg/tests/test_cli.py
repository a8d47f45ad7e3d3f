import json
import xml.etree.ElementTree as ET

import pytest

from rectnet import io as rio
from rectnet.cli import main


def run(tmp_path, name, *args):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, out


def manifest(out):
    return json.loads((out / "manifest.json").read_text())


def test_density_grid(tmp_path):
    code, out = run(tmp_path, "d", "density", "--grid", "0:5:0.1", "--tol", "1e-10")
    assert code == 0
    header, rows, comments = rio.read_csv(out / "density.csv")
    assert header == ["L", "l", "g"] and len(rows) == 51 * 51
    assert float(rows[0][2]) == pytest.approx(21.63069608720305, abs=1e-9)
    assert any(c.startswith("series tolerance") for c in comments)
    m = manifest(out)
    assert m["status"] == "ok" and m["outputs"]["density.csv"] == rio.sha256(out / "density.csv")


def test_rectangles_deterministic(tmp_path):
    _, a = run(tmp_path, "a", "simulate-rectangles", "--seed", "7", "--t-max", "20")
    _, b = run(tmp_path, "b", "simulate-rectangles", "--seed", "7", "--t-max", "20")
    assert manifest(a)["outputs"] == manifest(b)["outputs"]
    _, c = run(tmp_path, "c", "simulate-rectangles", "--seed", "8", "--t-max", "20")
    assert manifest(a)["outputs"] != manifest(c)["outputs"]


def test_network_formats(tmp_path):
    code, out = run(tmp_path, "svg", "simulate-network", "--seed", "1", "--t-max", "5", "--format", "svg")
    assert code == 0
    ET.parse(out / "network.svg")
    code, out = run(tmp_path, "jl", "simulate-network", "--seed", "1", "--events-max", "40", "--format", "jsonl")
    lines = (out / "branches.jsonl").read_text(encoding="utf-8").splitlines()
    recs = [json.loads(x) for x in lines]
    assert code == 0 and len(recs) == len({r["label"] for r in recs}) > 40


def test_usage_errors(tmp_path):
    code, out = run(tmp_path, "u", "simulate-network", "--seed", "1")
    assert code == 2 and manifest(out)["status"] == "failed"
    assert main(["density", "--grid", "3:1:1"]) == 2
    assert main(["no-such-command"]) == 2


def test_runtime_failure_marks_manifest(tmp_path):
    # too few frozen rectangles for a goodness-of-fit test
    code, out = run(tmp_path, "f", "stats", "--t-max", "3", "--replicates", "1")
    m = manifest(out)
    assert code == 1 and m["status"] == "failed" and "100 samples" in m["error"]


def test_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("RECTNET_SEED", "3")
    _, out = run(tmp_path, "e", "couple", "--replicates", "50")
    assert manifest(out)["config"]["seed"] == 3
    _, out = run(tmp_path, "e2", "couple", "--replicates", "50", "--seed", "4")
    assert manifest(out)["config"]["seed"] == 4
    monkeypatch.setenv("RECTNET_SEED", "x")
    assert main(["couple", "--out", str(tmp_path / "e3")]) == 2


def test_pde_and_spine(tmp_path):
    code, out = run(tmp_path, "p", "pde", "--which", "p", "--t-max", "2", "--step", "0.002")
    assert code == 0
    header, rows, comments = rio.read_csv(out / "p_density.csv")
    assert header == ["a", "density"] and len(rows) == 1001
    code, out = run(tmp_path, "u", "spine", "--mode", "u")
    assert code == 0 and (out / "u.csv").exists()


def test_validate_subset(tmp_path, capsys):
    code, out = run(tmp_path, "v", "validate", "--only", "8")
    assert code == 0 and "[PASS] criterion  8" in capsys.readouterr().out
    assert json.loads((out / "validation.json").read_text())[0]["passed"]


def test_fmt_roundtrip():
    for x in (0.1, 1 / 3, 1e-300, 2.5e17):
        assert float(rio.fmt(x)) == x
    assert rio.fmt(float("inf")) == "inf" and rio.fmt(True) == "1"
