"""Run configuration: typed records, JSON parsing and the canonical form.

A configuration file is a JSON object with the top-level keys ``grid``,
``initial``, ``solver``, ``exponents``, ``experiments``, ``output`` and the
optional ``tolerances``. Unknown keys anywhere are rejected by name; all
violations found are reported together.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import ConfigError
from .grid import GridSpec
from .solver import SolverConfig

EXPERIMENTS = (
    "weak_strong",
    "entropy_identity",
    "maxwellian_propagation",
    "moment_propagation",
    "maximum_principle",
    "interpolation",
)

DENSITY_KINDS = ("maxwellian", "perturbed", "bimodal", "tail")

DEFAULT_TOLERANCES = {
    # sup_t H(f_t|g_t) when f0 == g0
    "identical_rel_entropy": 1e-10,
    # envelope uses factor * calibrated C*
    "envelope_factor": 2.0,
    # calibrated C* of the reference family; null means self-calibrated
    "gronwall_calibration": None,
    # one-sided slack of the entropy identity, relative to max |-G + B|
    "identity_slack": 1e-2,
    "corridor_low": 0.25,
    "corridor_high": 4.0,
    "moment_factor": 1.5,
    "max_principle": 1e-10,
    "interpolation_C": 10.0,
}

_TOP_KEYS = ("grid", "initial", "solver", "exponents", "experiments", "output", "tolerances")
_GRID_KEYS = ("L", "N", "gamma")
_INITIAL_KEYS = ("g0", "f0")
_DENSITY_KEYS = ("kind", "mu", "mean", "mass", "energy", "amplitude", "mode", "phase", "separation", "tail_mu")
_SOLVER_KEYS = ("T", "cfl", "projection", "seed", "rule", "dt_max")
_EXPONENT_KEYS = ("kappa", "nu", "zeta", "rho")
_OUTPUT_KEYS = ("dir", "cadence", "snapshot_times")


def rho_auto(kappa: float, nu: float, zeta: float, gamma: float) -> float:
    """Moment order ``max(2 kappa, 2 kappa + 2 gamma + 4, 2 zeta, nu)``."""
    return max(2.0 * kappa, 2.0 * kappa + 2.0 * gamma + 4.0, 2.0 * zeta, nu)


def smoothness_beta(ell: float, delta: float) -> float:
    return max(2.0 + (ell - 2.0) / (2.0 + delta), 1.0)


def moment_count(gamma: float, ell: float, delta: float) -> float:
    """Number of moments asked of the weak solution for a given smoothness of ``ln g0``."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    return 8.0 * (smoothness_beta(ell, delta) + (2.0 - gamma) / (2.0 * delta)) - gamma


@dataclass(frozen=True)
class DensitySpec:
    """Initial datum.

    ``maxwellian``: ``mass (mu/pi)^(3/2) exp(-mu |v - mean|^2)``; if ``energy``
    is given, ``mu`` is chosen so that ``int |v|^2 f`` equals it.
    ``perturbed``: that Maxwellian times ``1 + amplitude cos(mode pi v_1 / L + phase)``,
    projected back onto the Maxwellian's mass, momentum and energy.
    ``bimodal``: two Maxwellians at ``mean +- separation e_1``, total ``mass``.
    ``tail``: the Maxwellian plus ``amplitude`` times a wider one of rate ``tail_mu``,
    projected like ``perturbed``.
    """

    kind: str = "maxwellian"
    mu: float = 0.5
    mean: tuple = (0.0, 0.0, 0.0)
    mass: float = 1.0
    energy: float | None = None
    amplitude: float = 0.0
    mode: int = 1
    phase: float = 0.0
    separation: float = 1.0
    tail_mu: float = 0.25

    def violations(self, prefix: str) -> list:
        out = []
        if self.kind not in DENSITY_KINDS:
            out.append(f"{prefix}.kind must be one of {DENSITY_KINDS}, got {self.kind!r}")
        if not (self.mu > 0 and math.isfinite(self.mu)):
            out.append(f"{prefix}.mu must be > 0, got {self.mu}")
        if len(self.mean) != 3 or not all(math.isfinite(m) for m in self.mean):
            out.append(f"{prefix}.mean must be three finite numbers")
        if not (self.mass > 0 and math.isfinite(self.mass)):
            out.append(f"{prefix}.mass must be > 0, got {self.mass}")
        if self.energy is not None and len(self.mean) == 3:
            if not self.energy > self.mass * sum(m * m for m in self.mean):
                out.append(f"{prefix}.energy must exceed mass |mean|^2")
        if not 0 <= self.amplitude < 1:
            out.append(f"{prefix}.amplitude must lie in [0, 1), got {self.amplitude}")
        if int(self.mode) != self.mode or self.mode < 0:
            out.append(f"{prefix}.mode must be a non-negative integer, got {self.mode}")
        if not self.tail_mu > 0:
            out.append(f"{prefix}.tail_mu must be > 0, got {self.tail_mu}")
        return out

    @property
    def effective_mu(self) -> float:
        if self.energy is None:
            return self.mu
        thermal = self.energy / self.mass - sum(m * m for m in self.mean)
        return 1.5 / thermal

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "mu": self.mu,
            "mean": list(self.mean),
            "mass": self.mass,
            "energy": self.energy,
            "amplitude": self.amplitude,
            "mode": self.mode,
            "phase": self.phase,
            "separation": self.separation,
            "tail_mu": self.tail_mu,
        }


@dataclass(frozen=True)
class ExponentSet:
    kappa: float = 1.0
    nu: float = 1.0
    zeta: float = 2.0
    rho: float | None = None  # None means derived from the others

    def resolved_rho(self, gamma: float) -> float:
        return rho_auto(self.kappa, self.nu, self.zeta, gamma) if self.rho is None else float(self.rho)

    def to_dict(self, gamma: float) -> dict:
        return {"kappa": self.kappa, "nu": self.nu, "zeta": self.zeta, "rho": self.resolved_rho(gamma)}


@dataclass(frozen=True)
class OutputSpec:
    dir: str = "out"
    cadence: int = 20
    snapshot_times: tuple = ()

    def to_dict(self) -> dict:
        return {"dir": self.dir, "cadence": self.cadence, "snapshot_times": list(self.snapshot_times)}


@dataclass(frozen=True)
class ExperimentConfig:
    grid: GridSpec
    g0: DensitySpec = DensitySpec()
    f0: DensitySpec | None = None
    solver: SolverConfig = SolverConfig(T=0.5)
    exponents: ExponentSet = ExponentSet()
    experiments: tuple = ()
    output: OutputSpec = OutputSpec()
    tolerances: tuple = ()  # sorted (key, value) overrides of DEFAULT_TOLERANCES
    seed: int = 0

    @property
    def rho(self) -> float:
        return self.exponents.resolved_rho(self.grid.gamma)

    def tolerance(self, key: str):
        return dict(self.tolerances).get(key, DEFAULT_TOLERANCES[key])

    def with_tolerances(self, **kw) -> "ExperimentConfig":
        merged = dict(self.tolerances)
        merged.update(kw)
        return replace(self, tolerances=tuple(sorted(merged.items())))

    def to_dict(self) -> dict:
        """Canonical form: every default filled in, ``rho`` resolved."""
        s = self.solver
        tol = dict(DEFAULT_TOLERANCES)
        tol.update(dict(self.tolerances))
        return {
            "grid": self.grid.to_dict(),
            "initial": {"g0": self.g0.to_dict(), "f0": None if self.f0 is None else self.f0.to_dict()},
            "solver": {
                "T": s.T,
                "cfl": s.cfl,
                "projection": s.projection,
                "seed": self.seed,
                "rule": s.rule,
                "dt_max": s.dt_max,
            },
            "exponents": self.exponents.to_dict(self.grid.gamma),
            "experiments": list(self.experiments),
            "output": self.output.to_dict(),
            "tolerances": tol,
        }

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def config_hash(self) -> str:
        """sha256 of the canonical form with the output directory left out."""
        d = self.to_dict()
        d["output"] = dict(d["output"], dir=None)
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


# -- parsing ------------------------------------------------------------------


def _reject_duplicates(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise ConfigError(f"duplicate key {k!r}")
        out[k] = v
    return out


def _unknown(d, allowed, where, problems):
    if not isinstance(d, dict):
        problems.append(f"{where} must be an object")
        return {}
    for k in d:
        if k not in allowed:
            problems.append(f"unknown key {k!r} in {where} (allowed: {', '.join(allowed)})")
    return d


def _number(d, key, where, problems, default=None, kind=float):
    if key not in d:
        return default
    val = d[key]
    if val is None and default is None:  # optional entries may be written as null
        return None
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        problems.append(f"{where}.{key} must be a number, got {val!r}")
        return default
    if kind is int and int(val) != val:
        problems.append(f"{where}.{key} must be an integer, got {val!r}")
        return default
    return kind(val)


def _density(d, where, problems):
    if d is None:
        return None
    d = _unknown(d, _DENSITY_KEYS, where, problems)
    base = DensitySpec()
    mean = d.get("mean", list(base.mean))
    if not (isinstance(mean, list) and len(mean) == 3 and all(isinstance(m, (int, float)) for m in mean)):
        problems.append(f"{where}.mean must be a list of three numbers")
        mean = list(base.mean)
    kind = d.get("kind", base.kind)
    spec = DensitySpec(
        kind=kind,
        mu=_number(d, "mu", where, problems, base.mu),
        mean=tuple(float(m) for m in mean),
        mass=_number(d, "mass", where, problems, base.mass),
        energy=_number(d, "energy", where, problems, None),
        amplitude=_number(d, "amplitude", where, problems, base.amplitude),
        mode=_number(d, "mode", where, problems, base.mode, int),
        phase=_number(d, "phase", where, problems, base.phase),
        separation=_number(d, "separation", where, problems, base.separation),
        tail_mu=_number(d, "tail_mu", where, problems, base.tail_mu),
    )
    problems.extend(spec.violations(where))
    return spec


def config_from_dict(doc: dict) -> ExperimentConfig:
    """Validate a decoded document. Raises :class:`ConfigError` listing every violation."""
    problems: list = []
    doc = _unknown(doc, _TOP_KEYS, "config", problems)
    if "grid" not in doc:
        problems.append("missing required section 'grid'")
    g = _unknown(doc.get("grid", {}), _GRID_KEYS, "grid", problems)
    grid = None
    try:
        grid = GridSpec(
            _number(g, "L", "grid", problems, 6.0),
            _number(g, "N", "grid", problems, 16, int),
            _number(g, "gamma", "grid", problems, -3.0),
        )
    except ConfigError as exc:
        problems.extend(exc.violations)

    init = _unknown(doc.get("initial", {}), _INITIAL_KEYS, "initial", problems)
    g0 = _density(init.get("g0", {}), "initial.g0", problems)
    f0 = _density(init.get("f0"), "initial.f0", problems)

    s = _unknown(doc.get("solver", {}), _SOLVER_KEYS, "solver", problems)
    seed = _number(s, "seed", "solver", problems, 0, int)
    projection = s.get("projection", True)
    if not isinstance(projection, bool):
        problems.append(f"solver.projection must be true or false, got {projection!r}")
        projection = True
    solver = None
    try:
        solver = SolverConfig(
            T=_number(s, "T", "solver", problems, 0.5),
            cfl=_number(s, "cfl", "solver", problems, 0.4),
            projection=projection,
            rule=s.get("rule", "zeta"),
            dt_max=_number(s, "dt_max", "solver", problems, None),
        )
    except ConfigError as exc:
        problems.extend(exc.violations)

    e = _unknown(doc.get("exponents", {}), _EXPONENT_KEYS, "exponents", problems)
    rho = e.get("rho", "auto")
    if rho == "auto":
        rho = None
    elif isinstance(rho, bool) or not isinstance(rho, (int, float)):
        problems.append(f"exponents.rho must be a number or \"auto\", got {rho!r}")
        rho = None
    exps = ExponentSet(
        kappa=_number(e, "kappa", "exponents", problems, 1.0),
        nu=_number(e, "nu", "exponents", problems, 1.0),
        zeta=_number(e, "zeta", "exponents", problems, 2.0),
        rho=None if rho is None else float(rho),
    )
    if min(exps.kappa, exps.nu, exps.zeta) < 0:
        problems.append("exponents kappa, nu, zeta must be >= 0")
    if grid is not None and exps.resolved_rho(grid.gamma) <= 0:
        problems.append("exponents.rho must be > 0")

    names = doc.get("experiments", [])
    if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
        problems.append("experiments must be a list of names")
        names = []
    for n in names:
        if n not in EXPERIMENTS:
            problems.append(f"unknown experiment {n!r} (known: {', '.join(EXPERIMENTS)})")

    o = _unknown(doc.get("output", {}), _OUTPUT_KEYS, "output", problems)
    snaps = o.get("snapshot_times", [])
    if not isinstance(snaps, list) or not all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in snaps):
        problems.append("output.snapshot_times must be a list of numbers")
        snaps = []
    out_dir = o.get("dir", "out")
    if not isinstance(out_dir, str):
        problems.append("output.dir must be a string")
        out_dir = "out"
    output = OutputSpec(dir=out_dir, cadence=_number(o, "cadence", "output", problems, 20, int),
                        snapshot_times=tuple(sorted(float(t) for t in snaps)))
    if output.cadence < 2:
        problems.append(f"output.cadence must be >= 2, got {output.cadence}")
    if solver is not None and any(t < 0 or t > solver.T for t in output.snapshot_times):
        problems.append("output.snapshot_times must lie in [0, T]")

    tol = _unknown(doc.get("tolerances", {}), tuple(DEFAULT_TOLERANCES), "tolerances", problems)
    for k, v in tol.items():
        if k in DEFAULT_TOLERANCES and v is not None and (isinstance(v, bool) or not isinstance(v, (int, float))):
            problems.append(f"tolerances.{k} must be a number")

    if problems:
        raise ConfigError("invalid configuration", problems)
    return ExperimentConfig(
        grid=grid,
        g0=g0,
        f0=f0,
        solver=solver,
        exponents=exps,
        experiments=tuple(names),
        output=output,
        tolerances=tuple(sorted((k, v) for k, v in tol.items() if k in DEFAULT_TOLERANCES)),
        seed=seed,
    )


def parse_config_text(text: str, source: str = "<string>") -> ExperimentConfig:
    try:
        doc = json.loads(text, object_pairs_hook=_reject_duplicates)
    except json.JSONDecodeError as exc:
        lines = text.splitlines()
        context = lines[exc.lineno - 1] if 0 < exc.lineno <= len(lines) else ""
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}", [f"line {exc.lineno}: {context.strip()}"]) from None
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{source}: top level must be a JSON object")
    return config_from_dict(doc)


def parse_config(path) -> ExperimentConfig:
    path = Path(path)
    text = path.read_text()  # OSError propagates; the CLI maps it to the I/O exit code
    return parse_config_text(text, str(path))
