import csv
import json
import subprocess
import sys

import jsonschema
import pytest

from viewselect.cli import main, parse_alpha_list
from viewselect.montecarlo import pixels_for_alpha

from conftest import FIXTURES, load_schema


def run(tmp_path, *argv, name="out.json"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    payload = json.loads(out.read_text()) if out.exists() else None
    return code, payload, out


def test_plan_pair(tmp_path):
    code, p, _ = run(tmp_path, "plan-pair", "--h", "1", "--alpha", "0.1")
    assert code == 0
    jsonschema.validate(p, load_schema("plan_pair"))
    assert p["t"]["value"] == pytest.approx(2.4461, abs=1e-4)
    assert p["diag1"]["value"] == pytest.approx(0.49585, abs=1e-5)
    assert p["ratio"] <= 1.41422


def test_plan_pair_scales_with_h(tmp_path):
    _, a, _ = run(tmp_path, "plan-pair", "--h", "1", "--alpha", "0.1", name="a.json")
    _, b, _ = run(tmp_path, "plan-pair", "--h", "2", "--alpha", "0.1", name="b.json")
    for key in ("t", "diag1", "eps2_sweep", "eps2_bound"):
        assert b[key]["value"] == pytest.approx(2 * a[key]["value"], rel=1e-9)
        assert b[key]["over_h"] == pytest.approx(a[key]["over_h"], rel=1e-9)


def test_plan_pair_bad_alpha(tmp_path, capsys):
    code, p, _ = run(tmp_path, "plan-pair", "--h", "1", "--alpha", "0.3")
    assert code == 2 and p is None
    assert "alpha" in capsys.readouterr().err


def test_alpha_list_parsing():
    assert parse_alpha_list("0.01..0.05") == [0.01, 0.02, 0.03, 0.04, 0.05]
    assert parse_alpha_list("0.1,0.05") == [0.1, 0.05]


def test_certify_grid_2d(tmp_path):
    csv_path = tmp_path / "cells.csv"
    code, p, _ = run(tmp_path, "certify-grid", "--dims", "2", "--alpha-list", "0.05,0.1",
                     "--csv", str(csv_path))
    assert code == 0
    jsonschema.validate(p, load_schema("certify_grid"))
    assert p["passed"] and p["max_ratio"] <= 1.72
    rows = list(csv.reader(csv_path.open()))
    assert rows[0] == ["alpha", "cell", "ratio", "bound"]
    assert len(rows) == 3


def test_certify_grid_bad_lambda(tmp_path):
    code, _, _ = run(tmp_path, "certify-grid", "--dims", "2", "--alpha-list", "0.1", "--lambda-h", "0.99")
    assert code == 2


def test_certify_grid_alpha_too_large(tmp_path):
    code, _, _ = run(tmp_path, "certify-grid", "--dims", "2", "--alpha-list", "0.2")
    assert code == 2


def test_certify_grid_violation(tmp_path, monkeypatch):
    import viewselect.grid as grid_mod

    monkeypatch.setattr(grid_mod, "RATIO_2D", 1.0)
    code, p, _ = run(tmp_path, "certify-grid", "--dims", "2", "--alpha-list", "0.1")
    assert code == 3
    jsonschema.validate(p, load_schema("certify_grid"))
    assert not p["passed"] and p["witness"]["alpha"] == 0.1


def _select(tmp_path, mesh, *extra, name="sel.json"):
    return run(tmp_path, "select-views", "--mesh", str(mesh), "--traj",
               str(FIXTURES / "lattice_traj.json"), "--r0", "0.5", *extra, name=name)


def test_select_views_flat(tmp_path):
    code, p, _ = _select(tmp_path, FIXTURES / "flat.obj", "--coverage", "1.0")
    assert code == 0
    jsonschema.validate(p, load_schema("select_views"))
    assert len(p["chosen"]) < 0.3 * p["trajectory_size"]
    assert p["stats"]["covered_fraction_area"] == 1.0


def test_select_views_orchard(tmp_path):
    code, p, _ = _select(tmp_path, FIXTURES / "orchard.obj")
    assert code == 0
    jsonschema.validate(p, load_schema("select_views"))
    assert len(p["levels"]) >= 2


def test_select_views_no_progress(tmp_path):
    code, p, _ = _select(tmp_path, FIXTURES / "flat.obj", "--k-min", "500")
    assert code == 4
    jsonschema.validate(p, load_schema("select_views"))
    assert not p["reached"]


def test_select_views_parse_errors(tmp_path, capsys):
    bad = tmp_path / "bad.obj"
    bad.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1 2 4 3\n")
    code, _, _ = _select(tmp_path, bad)
    assert code == 2
    assert "line 5" in capsys.readouterr().err
    empty = tmp_path / "empty.json"
    empty.write_text("[]")
    code = main(["select-views", "--mesh", str(FIXTURES / "flat.obj"), "--traj", str(empty), "--r0", "1"])
    assert code == 2
    code = main(["select-views", "--mesh", str(tmp_path / "missing.obj"), "--traj", str(empty), "--r0", "1"])
    assert code == 2


def test_simulate_hist(tmp_path):
    csv_path = tmp_path / "e.csv"
    code, p, _ = run(tmp_path, "simulate", "--mode", "hist", "--trials", "2000", "--seed", "7",
                     "--csv", str(csv_path))
    assert code == 0
    jsonschema.validate(p, load_schema("simulate"))
    rows = list(csv.reader(csv_path.open()))
    assert rows[0] == ["trial_index", "error"] and len(rows) == 2001
    assert p["pixel_alpha_linear"] == pytest.approx(0.0109, abs=1e-4)


def test_simulate_pixel_only(tmp_path):
    n_p = pixels_for_alpha(0.1)
    code, p, _ = run(tmp_path, "simulate", "--trials", "5000", "--n-p", repr(n_p), "--n-s", "0",
                     "--n-theta", "0")
    assert code == 0 and p["exceed_fraction"] == 0.0


def test_simulate_ratio(tmp_path):
    csv_path = tmp_path / "r.csv"
    code, p, _ = run(tmp_path, "simulate", "--mode", "ratio", "--trials", "500", "--n-cameras", "10",
                     "--csv", str(csv_path))
    assert code == 0
    jsonschema.validate(p, load_schema("simulate"))
    assert p["max_ratio"] > 0
    assert next(csv.reader(csv_path.open())) == ["trial_index", "error", "error_all", "ratio"]


def test_simulate_ratio_requires_cameras(tmp_path):
    code, _, _ = run(tmp_path, "simulate", "--mode", "ratio", "--trials", "10")
    assert code == 2


@pytest.mark.parametrize("argv", [
    ["simulate", "--trials", "0"],
    ["simulate", "--n-p", "-1"],
    ["simulate", "--mode", "box"],
    ["plan-pair", "--h", "-1", "--alpha", "0.1"],
    ["bogus"],
])
def test_invalid_flags(argv):
    assert main(argv) == 2


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "viewselect.cli", "plan-pair", "--h", "1", "--alpha", "0.05"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["alpha"] == 0.05
