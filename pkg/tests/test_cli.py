import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import perturbed_maxwellian, reference_config
from landau_lab import cli, functionals as fn, io
from landau_lab.errors import NumericalFailure
from landau_lab.grid import integrate, make_grid, maxwellian
from landau_lab.solver import SolverState


def _write_config(path, **kw):
    cfg = reference_config(**kw)
    path.write_text(cfg.canonical_json())
    return path


# -- simulate -----------------------------------------------------------------


def test_simulate_zero_horizon(tmp_path):
    cfg = reference_config(N=12, T=0.0, f0=False)
    d = cli.simulate(cfg, tmp_path / "run")
    rows = io.read_timeseries(d / "timeseries.csv")
    assert len(rows) == 1 and rows[0]["t"] == 0.0
    assert np.isnan(rows[0]["rel_entropy"])
    assert sorted(p.name for p in (d / "snapshots").iterdir()) == ["g_t0.000000.json", "g_t0.000000.raw"]
    assert not (d / io.INCOMPLETE).exists()
    assert (d / "config.json").read_text() == cfg.canonical_json()


def test_simulate_with_f0_fills_relative_columns(tmp_path):
    cfg = reference_config(N=12, T=0.05, output={"cadence": 3})
    d = cli.simulate(cfg, tmp_path / "run")
    rows = io.read_timeseries(d / "timeseries.csv")
    assert [r["t"] for r in rows] == [0.0, 0.025, 0.05]
    assert all(r["rel_entropy"] > 0 and np.isfinite(r["good_term"]) for r in rows)
    assert all(r["clip_count"] == 0 for r in rows)
    names = sorted(p.name for p in (d / "snapshots").iterdir())
    assert names == ["f_t0.050000.json", "f_t0.050000.raw", "g_t0.050000.json", "g_t0.050000.raw"]


def test_simulate_failure_keeps_last_valid_state(tmp_path, monkeypatch):
    grid = make_grid(6.0, 12, -3.0)

    def boom(g0, grid_, config, **kw):
        raise NumericalFailure("blew up", last_valid=SolverState(t=0.01, g=maxwellian(grid), target=None))

    monkeypatch.setattr(cli, "evolve", boom)
    cfg = _write_config(tmp_path / "c.json", N=12, T=0.05, f0=False)
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "run")]) == cli.EXIT_NUMERIC
    d = tmp_path / "run"
    assert (d / io.INCOMPLETE).exists()
    f, g2, meta = io.read_snapshot(d / "snapshots" / "last_valid.json")
    assert g2 == grid and meta["time"] == 0.01


# -- diagnose -----------------------------------------------------------------


@pytest.fixture
def snapshot_pair(tmp_path):
    grid = make_grid(6.0, 8, -3.0)
    f, g = perturbed_maxwellian(grid, 0.3), maxwellian(grid)
    g /= integrate(g, grid)
    fs = io.write_snapshot(tmp_path / "f", f, grid, 0.0, "f")
    gs = io.write_snapshot(tmp_path / "g", g, grid, 0.0, "g")
    return fs, gs, f, g, grid


def test_diagnose_matches_library(snapshot_pair):
    fs, gs, f, g, grid = snapshot_pair
    rows = cli.diagnose(fs, gs, ["rel_entropy", "pinsker_gap"])
    assert rows == [("rel_entropy", fn.relative_entropy(f, g, grid)), ("pinsker_gap", fn.pinsker_gap(f, g, grid))]
    rows = dict(cli.diagnose(fs, None, ["mass", "entropy", "dissipation"]))
    assert rows["entropy"] == fn.entropy(f, grid)
    assert rows["dissipation"] == fn.entropy_dissipation(f, grid)


def test_diagnose_cli_prints_table(snapshot_pair, capsys, tmp_path):
    fs, gs, f, g, grid = snapshot_pair
    code = cli.main(["diagnose", "--snapshot", str(fs), "--reference", str(gs), "--functional", "good_term",
                     "--functional", "bad_term", "--out", str(tmp_path / "d")])
    assert code == cli.EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert [ln.split()[0] for ln in lines] == ["good_term", "bad_term"]
    assert float(lines[0].split()[1]) == fn.good_term(f, g, grid)
    saved = json.loads((tmp_path / "d" / "diagnose.json").read_text())
    assert set(saved) == {"good_term", "bad_term"}


def test_diagnose_errors(snapshot_pair, tmp_path, capsys):
    fs, gs, *_ = snapshot_pair
    assert cli.main(["diagnose", "--snapshot", str(fs), "--functional", "rel_entropy"]) == cli.EXIT_CONFIG
    assert cli.main(["diagnose", "--snapshot", str(fs), "--reference", str(gs), "--functional", "nope"]) == cli.EXIT_CONFIG
    assert cli.main(["diagnose", "--snapshot", str(tmp_path / "missing.json")]) == cli.EXIT_IO
    raw = fs.with_suffix(".raw")
    raw.write_bytes(raw.read_bytes()[:-8])
    assert cli.main(["diagnose", "--snapshot", str(fs), "--reference", str(gs)]) == cli.EXIT_IO
    assert "checksum" in capsys.readouterr().err


def test_invalid_input_values_exit_one(snapshot_pair, tmp_path, capsys):
    fs, gs, f, g, grid = snapshot_pair
    heavy = io.write_snapshot(tmp_path / "heavy", 2.0 * f, grid, 0.0, "f")
    assert cli.main(["diagnose", "--snapshot", str(heavy), "--reference", str(gs), "--functional", "pinsker_gap"]) == 1
    assert "unit mass" in capsys.readouterr().err


# -- experiment and exit codes ------------------------------------------------


def test_experiment_command(tmp_path, capsys):
    cfg = _write_config(tmp_path / "c.json", N=12, T=0.1, f0=False, experiments=["maximum_principle"])
    out = tmp_path / "exp"
    assert cli.main(["experiment", "--config", str(cfg), "--out", str(out)]) == cli.EXIT_OK
    assert capsys.readouterr().out.strip() == "maximum_principle: pass"
    report = json.loads((out / "maximum_principle.json").read_text())
    cfg_obj = reference_config(N=12, T=0.1, f0=False, experiments=["maximum_principle"])
    assert report["config_hash"] == cfg_obj.config_hash() and report["passed"] is True
    assert json.loads((out / "summary.json").read_text())["passed"] == {"maximum_principle": True}
    assert not (out / io.INCOMPLETE).exists()


def test_failed_experiment_exits_one(tmp_path):
    cfg = _write_config(tmp_path / "c.json", N=12, T=0.1, f0=False, tolerances={"max_principle": -1.0})
    code = cli.main(["experiment", "--config", str(cfg), "--out", str(tmp_path / "e"), "--name", "maximum_principle"])
    assert code == cli.EXIT_OTHER


def test_config_errors_exit_two(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"gird": {}}')
    assert cli.main(["simulate", "--config", str(bad)]) == cli.EXIT_CONFIG
    assert "gird" in capsys.readouterr().err
    cfg = _write_config(tmp_path / "c.json", N=12, T=0.1, f0=False)
    assert cli.main(["experiment", "--config", str(cfg), "--out", str(tmp_path / "e")]) == cli.EXIT_CONFIG


def test_missing_config_exits_four(tmp_path):
    assert cli.main(["simulate", "--config", str(tmp_path / "nope.json")]) == cli.EXIT_IO


def test_console_entry_point(tmp_path):
    cfg = _write_config(tmp_path / "c.json", N=8, T=0.0, f0=False)
    out = tmp_path / "run"
    proc = subprocess.run([sys.executable, "-m", "landau_lab.cli", "simulate", "--config", str(cfg), "--out", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (out / "timeseries.csv").exists()
