"""Time-series CSV, binary snapshots with JSON sidecars, atomic file writes."""
from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import crcmod
import numpy as np

from .errors import ChecksumError, GridMismatchError, SnapshotError
from .grid import GridSpec

COLUMNS = (
    "t", "mass", "mom_x", "mom_y", "mom_z", "energy", "entropy", "dissipation", "rel_entropy",
    "good_term", "bad_term", "K1", "K2", "K3", "lambda_hat", "Lambda_hat", "c0_hat",
    "env_klo", "env_Khi", "clip_count",
)
SNAPSHOT_FORMAT = 1
INCOMPLETE = ".incomplete"

# CRC-64/XZ (ECMA-182 polynomial, reflected, all-ones init and final xor)
crc64 = crcmod.mkCrcFun(0x142F0E1EBA9EA3693, initCrc=0, rev=True, xorOut=0xFFFFFFFFFFFFFFFF)


def atomic_write(path, data: bytes | str) -> Path:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    if isinstance(data, str):
        data = data.encode()
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_json(path, obj) -> Path:
    return atomic_write(path, json.dumps(obj, sort_keys=True, indent=2) + "\n")


# -- time series --------------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return "nan"
    x = float(x)
    return "%.17g" % x if math.isfinite(x) else ("nan" if math.isnan(x) else ("inf" if x > 0 else "-inf"))


def format_timeseries(rows) -> str:
    """CSV text with the fixed column order; missing or disabled entries become ``nan``."""
    rows = sorted(rows, key=lambda r: r["t"])
    lines = [",".join(COLUMNS)]
    for r in rows:
        unknown = set(r) - set(COLUMNS)
        if unknown:
            raise KeyError(f"unknown time-series columns: {sorted(unknown)}")
        lines.append(",".join(_fmt(r.get(c)) for c in COLUMNS))
    return "\n".join(lines) + "\n"


def write_timeseries(path, rows) -> Path:
    return atomic_write(path, format_timeseries(rows))


def read_timeseries(path) -> list:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != ",".join(COLUMNS):
        raise ValueError(f"{path}: unexpected time-series header")
    out = []
    for n, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(COLUMNS):
            raise ValueError(f"{path}:{n}: expected {len(COLUMNS)} fields, got {len(parts)}")
        out.append({c: float(p) for c, p in zip(COLUMNS, parts)})
    return out


# -- snapshots ----------------------------------------------------------------


def write_snapshot(stem, f: np.ndarray, grid: GridSpec, t: float, label: str = "g") -> Path:
    """Write ``<stem>.raw`` (little-endian float64, C order) and ``<stem>.json``; returns the sidecar path."""
    stem = Path(stem)
    f = np.asarray(f, dtype=float)
    if f.shape != grid.shape:
        raise GridMismatchError(f"field shape {f.shape} does not match grid {grid.shape}")
    raw = np.ascontiguousarray(f, dtype="<f8").tobytes()
    raw_path = stem.parent / (stem.name + ".raw")
    atomic_write(raw_path, raw)
    meta = {
        "format_version": SNAPSHOT_FORMAT,
        "grid": grid.to_dict(),
        "time": float(t),
        "label": label,
        "dtype": "<f8",
        "order": "C",
        "raw_file": raw_path.name,
        "checksum": {"algorithm": "crc64-xz", "value": "%016x" % crc64(raw)},
    }
    return write_json(stem.parent / (stem.name + ".json"), meta)


def read_snapshot(sidecar, grid: GridSpec | None = None):
    """Load a snapshot; returns ``(field, grid, meta)``.

    The CRC of the raw bytes is checked first, then the value count against
    the sidecar grid, then (optionally) the sidecar grid against ``grid``.
    """
    sidecar = Path(sidecar)
    try:
        meta = json.loads(sidecar.read_text())
    except json.JSONDecodeError as exc:
        raise SnapshotError(f"{sidecar}: invalid sidecar JSON ({exc.msg})") from None
    if meta.get("format_version") != SNAPSHOT_FORMAT:
        raise SnapshotError(f"{sidecar}: unsupported format version {meta.get('format_version')!r}")
    raw = (sidecar.parent / meta["raw_file"]).read_bytes()
    want = meta["checksum"]["value"]
    got = "%016x" % crc64(raw)
    if got != want:
        raise ChecksumError(f"{sidecar}: checksum mismatch (recorded {want}, computed {got})")
    g = meta["grid"]
    snap_grid = GridSpec(g["L"], g["N"], g["gamma"])
    if len(raw) != 8 * snap_grid.N**3:
        raise GridMismatchError(f"{sidecar}: raw file holds {len(raw) // 8} values, grid N={snap_grid.N} needs {snap_grid.N**3}")
    if grid is not None and grid != snap_grid:
        raise GridMismatchError(f"{sidecar}: snapshot grid {snap_grid.to_dict()} differs from {grid.to_dict()}")
    f = np.frombuffer(raw, dtype="<f8").reshape(snap_grid.shape).astype(float)
    return f, snap_grid, meta


def snapshot_stem(directory, label: str, t: float) -> Path:
    return Path(directory) / f"{label}_t{t:.6f}"


# -- output directories -------------------------------------------------------


def begin_output(directory, canonical_config: str) -> Path:
    """Create ``directory``, drop the ``.incomplete`` marker and the canonical config."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    atomic_write(d / INCOMPLETE, "")
    atomic_write(d / "config.json", canonical_config)
    return d


def finish_output(directory) -> None:
    marker = Path(directory) / INCOMPLETE
    if marker.exists():
        marker.unlink()
