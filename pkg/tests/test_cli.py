import csv
import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from perlick import cli
from perlick import dynamics as dy
from perlick.errors import IntegrationError
from perlick.model import ModelParams, energy_bounds


def run(*args):
    return cli.main([str(a) for a in args])


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_potential_minimum_matches_bounds(tmp_path):
    out = tmp_path / "v.csv"
    assert run("potential", "--kappa", -1, "--l", 0.5, "--samples", 4000, "-o", out) == 0
    header, data = read_csv(out)
    assert header == ["xi", "V_eff"]
    meta = json.loads((tmp_path / "v.meta.json").read_text())
    b = energy_bounds(ModelParams(-1.0), 0.5)
    assert meta["E_min"] == pytest.approx(b.e_min, abs=1e-15)
    assert data[:, 1].min() == pytest.approx(b.e_min, abs=1e-5)
    assert meta["E_escape"] == -1


def test_potential_flat_and_sphere(tmp_path):
    out = tmp_path / "v.json"
    assert run("potential", "--kappa", 0, "--l", 0.5, "--format", "json", "-o", out) == 0
    doc = json.loads(out.read_text())
    assert doc["asymptote"] == 0 and doc["V_eff"][-1] < 0
    out = tmp_path / "s.csv"
    assert run("potential", "--kappa", 1, "--l", 0.5, "-o", out) == 0
    _, data = read_csv(out)
    assert 0 < data[0, 0] and data[-1, 0] < math.pi


def test_bounds_lists_energies(tmp_path, capsys):
    assert run("bounds", "--kappa", -1, "--l", 0.25, "--E", "-8.03,-6,4") == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["E_min"] == -8.03125
    classes = [e["class"] for e in doc["energies"]]
    assert classes == ["bounded_closed", "bounded_closed", "unbounded"]
    assert len(doc["energies"][2]["turning_points"]) == 1


def test_simulate_outputs(tmp_path):
    out = tmp_path / "traj.csv"
    args = ("simulate", "--kappa", -1, "--beta", 3, "--E", -6, "--l", 0.25, "--lz", 0.1, "--samples", 300, "-o", out)
    assert run(*args) == 0
    header, data = read_csv(out)
    assert header == cli.TRAJ_COLUMNS and data.shape == (300, 14)
    summary = json.loads((tmp_path / "traj.summary.json").read_text())
    assert summary["closure"]["closed"] and summary["closure"]["winding"] == [3, 1]
    assert summary["drift"]["H"] < 1e-8 and summary["drift"]["pphi"] == 0
    assert abs(summary["frequencies"]["ratio_theta_xi"] - 1 / 3) < 1e-3
    first = out.read_bytes()
    assert run(*args) == 0
    assert out.read_bytes() == first


def test_csv_format_is_stable(tmp_path):
    out = tmp_path / "o.csv"
    assert run("orbit", "--kappa", 1, "--beta", "1/3", "--lz", 0.25, "--l", 0.25, "--E", -3, "--samples", 5, "-o", out) == 0
    text = out.read_bytes()
    assert b"\r" not in text and text.endswith(b"\n")
    first_row = text.split(b"\n")[1].split(b",")
    assert float(first_row[1]) == pytest.approx(0.034939175634879, rel=1e-12)
    assert all(v.decode() == format(float(v), ".17g") for v in first_row)


def test_orbit_multiple_energies_and_spatial(tmp_path):
    out = tmp_path / "fam.csv"
    assert run("orbit", "--kappa", -1, "--beta", "1/2", "--lz", 0.25, "--l", 0.25, "--E", "-8.03,-6,-1,4", "--samples", 50, "-o", out) == 0
    header, data = read_csv(out)
    assert header == ["E", "phi", "xi", "x", "y"] and data.shape == (200, 5)
    assert np.isnan(data[data[:, 0] == 4.0, 2]).any()
    out3 = tmp_path / "3d.csv"
    assert run("orbit", "--kappa", -1, "--beta", 2, "--E", -6, "--l", 0.25, "--lz", 0.1, "--samples", 50, "-o", out3) == 0
    header, data = read_csv(out3)
    assert header == ["t", "x", "y", "z"] and data.shape == (50, 4)


def test_verify_all_pass(tmp_path):
    out = tmp_path / "r.json"
    assert run("verify", "--kappa", 0, "--beta", 1, "--seed", 0, "--points", 200, "-o", out) == 0
    reports = json.loads(out.read_text())
    assert all(not r["failures"] for r in reports) and reports[0]["n"] > 0


def test_verify_failure_exit_code(tmp_path, monkeypatch):
    from perlick import poisson as pb

    def fake(params, count, seed):
        return [pb.BracketReport("broken", 1, 1.0, 1.0, 1e-6, [{"index": 0}])]

    monkeypatch.setattr(pb, "verify_full_algebra", fake)
    assert run("verify", "-o", tmp_path / "r.json") == cli.EXIT_VERIFY


def test_config_file_merged_under_flags(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# benchmark parameters\nkappa = 1\nl = 0.25\nE = -3\n")
    assert run("bounds", "--config", cfg) == 0
    assert json.loads(capsys.readouterr().out)["E_min"] == -7.96875
    assert run("bounds", "--config", cfg, "--kappa", -1) == 0
    assert json.loads(capsys.readouterr().out)["E_min"] == -8.03125


@pytest.mark.parametrize(
    "args",
    [
        ("bounds", "--beta", "0/1"),
        ("bounds", "--beta", "x"),
        ("simulate", "--tol", 1e-3),
        ("bounds", "--l", -1),
        ("bounds", "--config", "/nonexistent/file"),
        ("bounds", "--unknown-flag", 1),
    ],
)
def test_config_errors(args):
    assert run(*args) == cli.EXIT_CONFIG


def test_bad_config_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("curvature = 1\n")
    assert run("bounds", "--config", cfg) == cli.EXIT_CONFIG


def test_numerical_failure_exit_code(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise IntegrationError("step size collapsed", 0.0, None)

    monkeypatch.setattr(dy, "integrate", boom)
    assert run("simulate", "-o", tmp_path / "t.csv") == cli.EXIT_NUMERIC
    assert run("simulate", "--E", -100, "-o", tmp_path / "t.csv") == cli.EXIT_NUMERIC


def test_sweep_index_and_parallel_determinism(tmp_path):
    base = ("sweep", "--E", "-6,4", "--l", 0.25, "--lz", 0.1, "--t-end", 0.2, "--samples", 20)
    assert run(*base, "-o", tmp_path / "a") == 0
    assert run(*base, "--jobs", 2, "-o", tmp_path / "b") == 0
    idx = (tmp_path / "a" / "index.json").read_bytes()
    assert idx == (tmp_path / "b" / "index.json").read_bytes()
    cases = json.loads(idx)["cases"]
    assert len(cases) == 18
    for c in cases:
        b = energy_bounds(ModelParams.from_beta(c["kappa"], c["beta"]), 0.25)
        unbounded = b.e_escape is not None and c["E"] >= b.e_escape
        assert c["class"] == ("unbounded" if unbounded else "bounded_closed")
        assert (tmp_path / "a" / c["file"]).exists()


def test_sweep_records_failures(tmp_path, monkeypatch):
    calls = {"n": 0}
    real = dy.integrate

    def flaky(*a, **k):
        calls["n"] += 1
        if calls["n"] == 1:
            raise IntegrationError("forced", 0.0, None)
        return real(*a, **k)

    monkeypatch.setattr(dy, "integrate", flaky)
    assert run("sweep", "--E", "-6", "--t-end", 0.1, "--samples", 10, "-o", tmp_path) == 0
    cases = json.loads((tmp_path / "index.json").read_text())["cases"]
    assert "IntegrationError" in cases[0]["error"] and "error" not in cases[1]


def test_module_entry_point_and_logging(tmp_path):
    env = dict(os.environ, PERLICK_LOG="debug")
    proc = subprocess.run(
        [sys.executable, "-m", "perlick", "bounds", "--kappa", "0", "--l", "1", "--E", "-0.375"],
        capture_output=True, text=True, env=env,
    )
    assert proc.returncode == 0
    doc = json.loads(proc.stdout)
    assert doc["energies"][0]["turning_points"] == pytest.approx([2 / 3, 2.0], abs=1e-12)
