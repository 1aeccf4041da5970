"""Command line entry point: ``landau-lab simulate|experiment|diagnose``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O or
snapshot error, 1 anything else.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import functionals as fn
from . import harness, io
from .config import ExperimentConfig, parse_config
from .errors import ConfigError, LandauLabError, NumericalFailure, SnapshotError
from .grid import conserved_triple
from .solver import evolve, sample_schedule

EXIT_OK, EXIT_OTHER, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3, 4


# -- simulate -----------------------------------------------------------------


def _clip_counts(reports, times):
    """Clipped cells accumulated over the steps ending in ``(t_{k-1}, t_k]``."""
    out, prev = [], -np.inf
    for t in times:
        out.append(sum(r.clip_count for r in reports if prev < r.t <= t + 1e-12))
        prev = t + 1e-12
    return out


def simulate(config: ExperimentConfig, out_dir) -> Path:
    """Evolve ``g0`` (and ``f0`` if configured), write the time series and snapshots."""
    grid = config.grid
    d = io.begin_output(out_dir, config.canonical_json())
    snap_dir = d / "snapshots"
    snap_dir.mkdir(exist_ok=True)
    times = sample_schedule(config.solver.T, config.output.cadence)
    snaps = sorted(set(config.output.snapshot_times) | {config.solver.T})
    g0 = harness.build_density(config.g0, grid)
    rows = []
    try:
        f_traj = None
        if config.f0 is not None:
            f0 = harness.build_density(config.f0, grid)
            f_traj = evolve(f0, grid, config.solver, sample_times=times, snapshot_times=snaps, keep_samples=True)
        g_traj = evolve(g0, grid, config.solver, sample_times=times, snapshot_times=snaps, keep_samples=True)
    except NumericalFailure as exc:
        last = exc.last_valid
        if last is not None:
            io.write_snapshot(snap_dir / "last_valid", last.g, grid, last.t, "last_valid")
        io.write_timeseries(d / "timeseries.csv", rows)
        raise
    clips = _clip_counts(g_traj.reports, g_traj.times)
    for k, (t, g) in enumerate(zip(g_traj.times, g_traj.samples)):
        f = None if f_traj is None else f_traj.samples[k]
        rows.append(harness.diagnostic_row(t, g, grid, config, f=f, clip_count=clips[k]))
    io.write_timeseries(d / "timeseries.csv", rows)
    for t, g in sorted(g_traj.snapshots.items()):
        io.write_snapshot(io.snapshot_stem(snap_dir, "g", t), g, grid, t, "g")
    if f_traj is not None:
        for t, f in sorted(f_traj.snapshots.items()):
            io.write_snapshot(io.snapshot_stem(snap_dir, "f", t), f, grid, t, "f")
    io.finish_output(d)
    return d


# -- experiment ---------------------------------------------------------------


def run_experiments(config: ExperimentConfig, out_dir, names=None) -> dict:
    names = list(names or config.experiments)
    if not names:
        raise ConfigError("no experiments requested", ["set \"experiments\" in the config or pass --name"])
    d = io.begin_output(out_dir, config.canonical_json())
    results = {}
    for name in names:
        report = harness.run_experiment(name, config)
        body = report.to_dict()
        body.setdefault("config_hash", config.config_hash())
        body["experiment"] = name
        body["passed"] = bool(report.passed)
        io.write_json(d / f"{name}.json", body)
        results[name] = body["passed"]
    io.write_json(d / "summary.json", {"config_hash": config.config_hash(), "passed": results})
    io.finish_output(d)
    return results


# -- diagnose -----------------------------------------------------------------


def _single(f, grid):
    stats = conserved_triple(f, grid)
    return {
        "mass": stats.mass,
        "energy": stats.energy,
        "entropy": fn.entropy(f, grid),
        "dissipation": fn.entropy_dissipation(f, grid),
    }


PAIR_FUNCTIONALS = {
    "rel_entropy": fn.relative_entropy,
    "pinsker_gap": fn.pinsker_gap,
    "hellinger2": fn.hellinger2,
    "good_term": fn.good_term,
    "bad_term": fn.bad_term,
    "rel_fisher": fn.weighted_relative_fisher,
}
SINGLE_FUNCTIONALS = ("mass", "energy", "entropy", "dissipation")


def diagnose(f_path, g_path=None, names=("rel_entropy", "pinsker_gap")) -> list:
    """Evaluate functionals on stored snapshots; returns ``[(name, value), ...]``."""
    f, grid, _ = io.read_snapshot(f_path)
    g = None
    if g_path is not None:
        g, _, _ = io.read_snapshot(g_path, grid)
    out = []
    single = None
    for name in names:
        if name in PAIR_FUNCTIONALS:
            if g is None:
                raise ConfigError(f"functional {name!r} needs a reference snapshot (--reference)")
            out.append((name, float(PAIR_FUNCTIONALS[name](f, g, grid))))
        elif name in SINGLE_FUNCTIONALS:
            single = single or _single(f, grid)
            out.append((name, single[name]))
        else:
            known = sorted(PAIR_FUNCTIONALS) + list(SINGLE_FUNCTIONALS)
            raise ConfigError(f"unknown functional {name!r}", [f"known: {', '.join(known)}"])
    return out


def format_table(rows) -> str:
    width = max((len(n) for n, _ in rows), default=0)
    return "\n".join(f"{n:<{width}}  {'%.17g' % v}" for n, v in rows) + ("\n" if rows else "")


# -- entry point --------------------------------------------------------------


def _parser():
    p = argparse.ArgumentParser(prog="landau-lab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("simulate", help="evolve the configured initial data")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="output directory (default: output.dir of the config)")
    e = sub.add_parser("experiment", help="run configured experiments")
    e.add_argument("--config", required=True)
    e.add_argument("--out")
    e.add_argument("--name", action="append", help="experiment to run (repeatable; default: config list)")
    dg = sub.add_parser("diagnose", help="functionals of stored snapshots")
    dg.add_argument("--snapshot", required=True, help="sidecar JSON of f")
    dg.add_argument("--reference", help="sidecar JSON of g")
    dg.add_argument("--functional", action="append", help="functional name (repeatable)")
    dg.add_argument("--config", help="accepted for symmetry; unused")
    dg.add_argument("--out", help="also write diagnose.json here")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "diagnose":
            rows = diagnose(args.snapshot, args.reference, args.functional or ["rel_entropy", "pinsker_gap"])
            sys.stdout.write(format_table(rows))
            if args.out:
                Path(args.out).mkdir(parents=True, exist_ok=True)
                io.write_json(Path(args.out) / "diagnose.json", dict(rows))
            return EXIT_OK
        config = parse_config(args.config)
        out = args.out or config.output.dir
        if args.out:
            config = replace(config, output=replace(config.output, dir=args.out))
        if args.command == "simulate":
            simulate(config, out)
            return EXIT_OK
        results = run_experiments(config, out, args.name)
        for name, ok in results.items():
            print(f"{name}: {'pass' if ok else 'FAIL'}")
        return EXIT_OK if all(results.values()) else EXIT_OTHER
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (SnapshotError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (LandauLabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OTHER


if __name__ == "__main__":
    sys.exit(main())
