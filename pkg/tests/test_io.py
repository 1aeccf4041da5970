import json
import math
import os
import stat
import tempfile

import numpy as np
import pytest
from hypothesis import given, strategies as st

from landau_lab import io
from landau_lab.errors import ChecksumError, GridMismatchError, SnapshotError
from landau_lab.grid import make_grid, maxwellian

HEADER = (
    "t,mass,mom_x,mom_y,mom_z,energy,entropy,dissipation,rel_entropy,good_term,bad_term,"
    "K1,K2,K3,lambda_hat,Lambda_hat,c0_hat,env_klo,env_Khi,clip_count"
)


def test_crc64_check_value():
    # CRC-64/XZ catalogue check value
    assert io.crc64(b"123456789") == 0x995DC9BBDF1939FA


def test_empty_run_is_header_only(tmp_path):
    p = io.write_timeseries(tmp_path / "ts.csv", [])
    assert p.read_text() == HEADER + "\n"
    assert io.read_timeseries(p) == []


def test_missing_columns_are_nan_and_order_is_fixed(tmp_path):
    p = io.write_timeseries(tmp_path / "ts.csv", [{"t": 0.5, "mass": 1.0}, {"t": 0.0, "K1": 2.0}])
    lines = p.read_text().splitlines()
    assert lines[0] == HEADER
    assert lines[1].startswith("0,nan,") and lines[2].startswith("0.5,1,")
    assert lines[1].split(",")[11] == "2"
    assert lines[2].count("nan") == len(io.COLUMNS) - 2


def test_unknown_column_rejected(tmp_path):
    with pytest.raises(KeyError, match="bogus"):
        io.write_timeseries(tmp_path / "ts.csv", [{"t": 0.0, "bogus": 1.0}])


@given(st.lists(st.floats(allow_nan=False), min_size=len(io.COLUMNS) - 1, max_size=len(io.COLUMNS) - 1))
def test_timeseries_round_trip_bit_exact(values):
    row = dict(zip(io.COLUMNS, [0.25] + values))
    with tempfile.TemporaryDirectory() as d:
        back = io.read_timeseries(io.write_timeseries(os.path.join(d, "ts.csv"), [row]))[0]
    for k in io.COLUMNS:
        assert back[k] == row[k]
        assert math.copysign(1.0, back[k]) == math.copysign(1.0, row[k])


def test_read_timeseries_rejects_bad_files(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("t,mass\n0,1\n")
    with pytest.raises(ValueError, match="header"):
        io.read_timeseries(p)
    p.write_text(HEADER + "\n0,1\n")
    with pytest.raises(ValueError, match=":2:"):
        io.read_timeseries(p)


# -- snapshots ----------------------------------------------------------------


@pytest.fixture
def snapshot(tmp_path):
    grid = make_grid(6.0, 8, -3.0)
    f = maxwellian(grid) * (1.0 + 0.1 * np.sin(grid.v[1]))
    side = io.write_snapshot(tmp_path / "f_t0.5", f, grid, 0.5, "f")
    return side, f, grid


def test_snapshot_round_trip_bit_exact(snapshot):
    side, f, grid = snapshot
    back, g2, meta = io.read_snapshot(side, grid)
    assert g2 == grid
    assert back.tobytes() == f.tobytes()
    assert meta["time"] == 0.5 and meta["label"] == "f"
    assert meta["checksum"]["algorithm"] == "crc64-xz"


def test_snapshot_raw_layout(snapshot):
    side, f, grid = snapshot
    raw = np.fromfile(side.with_suffix(".raw"), dtype="<f8")
    N = grid.N
    ix, iy, iz = 3, 5, 1
    assert raw[(ix * N + iy) * N + iz] == f[ix, iy, iz]


def test_truncated_raw_is_checksum_error(snapshot):
    side, _, _ = snapshot
    raw = side.with_suffix(".raw")
    raw.write_bytes(raw.read_bytes()[:-8])
    with pytest.raises(ChecksumError):
        io.read_snapshot(side)


def test_sidecar_grid_edit_is_grid_mismatch(snapshot):
    side, _, _ = snapshot
    meta = json.loads(side.read_text())
    meta["grid"]["N"] = 10
    side.write_text(json.dumps(meta))
    with pytest.raises(GridMismatchError, match="N=10"):
        io.read_snapshot(side)


def test_requested_grid_must_match(snapshot):
    side, _, _ = snapshot
    with pytest.raises(GridMismatchError):
        io.read_snapshot(side, make_grid(5.0, 8, -3.0))


def test_write_snapshot_checks_shape(tmp_path):
    with pytest.raises(GridMismatchError):
        io.write_snapshot(tmp_path / "x", np.zeros((4, 4, 4)), make_grid(6.0, 8, -3.0), 0.0)


def test_bad_sidecars(snapshot):
    side, _, _ = snapshot
    meta = json.loads(side.read_text())
    side.write_text(json.dumps(dict(meta, format_version=99)))
    with pytest.raises(SnapshotError, match="format version"):
        io.read_snapshot(side)
    side.write_text("{not json")
    with pytest.raises(SnapshotError, match="sidecar"):
        io.read_snapshot(side)


# -- atomic writes ------------------------------------------------------------


def test_atomic_write_mode_and_no_leftovers(tmp_path):
    p = io.atomic_write(tmp_path / "a.txt", "hello")
    assert p.read_text() == "hello"
    assert stat.S_IMODE(p.stat().st_mode) == 0o644
    io.atomic_write(p, b"again")
    assert p.read_bytes() == b"again"
    assert sorted(x.name for x in tmp_path.iterdir()) == ["a.txt"]


def test_output_markers(tmp_path):
    d = io.begin_output(tmp_path / "run", "{}\n")
    assert (d / io.INCOMPLETE).exists() and (d / "config.json").read_text() == "{}\n"
    io.finish_output(d)
    assert not (d / io.INCOMPLETE).exists()
    io.finish_output(d)
