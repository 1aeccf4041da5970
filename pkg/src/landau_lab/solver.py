"""Explicit time stepping of the Landau equation in nondivergence form.

``d/dt g = a_bar : hess g + c_bar g`` with ``a_bar = a * g`` and ``c_bar``
recomputed at every Heun stage. After each step negative cells are clipped to
zero and the density is multiplied by a quadratic polynomial in ``v`` so that
mass, momentum and energy match their initial values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import symmat
from .coefficients import RULES, coeff_a_bar, coeff_c_bar
from .errors import ConfigError, NumericalFailure
from .functionals import entropy
from .grid import DensityStats, GridSpec, conserved_triple, hessian, integrate, positive_hessian


@dataclass(frozen=True)
class SolverConfig:
    T: float
    cfl: float = 0.4
    projection: bool = True
    integrator: str = "heun"
    rule: str = "zeta"
    entropy_check: bool = True
    entropy_slack: float = 1e-8
    projection_rounds: int = 2
    dt_max: float | None = None

    def __post_init__(self):
        problems = []
        if not (math.isfinite(self.T) and self.T >= 0):
            problems.append(f"T must be >= 0, got {self.T}")
        if not (0 < self.cfl <= 1):
            problems.append(f"cfl must lie in (0, 1], got {self.cfl}")
        if self.integrator != "heun":
            problems.append(f"unsupported integrator {self.integrator!r}")
        if self.dt_max is not None and not (math.isfinite(self.dt_max) and self.dt_max > 0):
            problems.append(f"dt_max must be positive, got {self.dt_max}")
        if self.rule not in RULES:
            problems.append(f"unknown singular rule {self.rule!r}")
        if problems:
            raise ConfigError("invalid solver configuration", problems)


@dataclass
class CoefficientPair:
    a_bar: np.ndarray
    c_bar: np.ndarray
    _monotone: tuple | None = field(default=None, repr=False, compare=False)


def assemble(g: np.ndarray, grid: GridSpec, rule: str = "zeta") -> CoefficientPair:
    return CoefficientPair(coeff_a_bar(g, grid, rule=rule), coeff_c_bar(g, grid, rule=rule))


def _monotone_stencil(coeffs: CoefficientPair, grid: GridSpec):
    if coeffs._monotone is None:
        w, e = symmat.selling_decomposition(coeffs.a_bar)
        N = grid.N
        node = np.indices(grid.shape)
        flat = []
        for sign in (1, -1):
            nb = np.clip(node[None] + sign * e, 0, N - 1)
            flat.append(((nb[:, 0] * N + nb[:, 1]) * N + nb[:, 2]).reshape(6, -1))
        coeffs._monotone = (w.reshape(6, -1) / grid.h**2, flat[0], flat[1])
    return coeffs._monotone


def apply_operator(u: np.ndarray, coeffs: CoefficientPair, grid: GridSpec, stencil: str = "standard") -> np.ndarray:
    """``a_bar : hess u + c_bar u`` for given coefficients.

    ``stencil="standard"`` is the linear central stencil; ``"log"`` writes the
    Hessian through ``ln u`` and requires ``u > 0`` for exactness.
    ``"monotone"`` splits ``a_bar`` into non-negative weights on lattice
    directions (Selling), so ``u`` enters every neighbour with a non-negative
    coefficient; neighbours outside the box are replaced by the nearest node.
    """
    if stencil == "monotone":
        w, plus, minus = _monotone_stencil(coeffs, grid)
        x = u.ravel()
        second = np.sum(w * (x[plus] + x[minus] - 2.0 * x), axis=0)
        return second.reshape(grid.shape) + coeffs.c_bar * u
    if stencil == "standard":
        H = hessian(u, grid)
    elif stencil == "log":
        H = positive_hessian(u, grid)
    else:
        raise ValueError(f"unknown stencil {stencil!r}")
    return symmat.contract(coeffs.a_bar, H) + coeffs.c_bar * u


def rhs(g: np.ndarray, grid: GridSpec, rule: str = "zeta", coeffs: CoefficientPair | None = None) -> np.ndarray:
    """Right-hand side with coefficients assembled from ``g`` itself."""
    if coeffs is None:
        coeffs = assemble(g, grid, rule)
    return apply_operator(g, coeffs, grid, "log")


def cfl_dt(a_bar: np.ndarray, grid: GridSpec, c_cfl: float = 0.4) -> float:
    """``c_cfl h^2 / (2 d max lambda_max(a_bar))`` with ``d = 3``.

    For ``c_cfl <= 1`` this also keeps every explicit Euler substep of the
    monotone stencil a non-negative combination of nodal values, since the
    Selling weights sum to at most ``tr a_bar``.
    """
    lam = float(np.max(symmat.eigvalsh(a_bar)[2]))
    if not lam > 0 or not math.isfinite(lam):
        raise NumericalFailure(f"degenerate diffusion matrix (max eigenvalue {lam!r})")
    return c_cfl * grid.h**2 / (6.0 * lam)


# -- conservation -------------------------------------------------------------


def _basis(grid):
    return np.stack([np.ones(grid.shape), grid.v[0], grid.v[1], grid.v[2], grid.speed2])


def _moments(f, basis, grid):
    return integrate(f * basis, grid)


def target_vector(stats: DensityStats) -> np.ndarray:
    return stats.as_vector()


def conservative_projection(f: np.ndarray, grid: GridSpec, target: DensityStats, rounds: int = 2):
    """Multiply ``f`` by ``1 + c . (1, v, |v|^2)`` so its mass, momentum and energy hit ``target``.

    The coefficients solve the Gram system of the basis weighted by ``f``
    (plus one refinement pass). If the multiplier makes cells negative they
    are clipped and the system is solved again, at most ``rounds`` times.
    Returns ``(f_new, clipped_cells)``.
    """
    if target.mass <= 0:
        raise NumericalFailure("projection target has non-positive mass")
    basis = _basis(grid)
    want = target_vector(target)
    clipped = 0
    for _ in range(rounds):
        w = basis.reshape(5, -1)
        G = (w * f.ravel()) @ w.T * grid.cell_volume
        try:
            cond = np.linalg.cond(G)
        except np.linalg.LinAlgError:
            cond = np.inf
        if not np.isfinite(cond) or cond > 1e14:
            raise NumericalFailure(f"singular moment system in projection (cond={cond:.3g})")
        mult = np.ones(grid.shape)
        for _ref in range(2):
            resid = want - _moments(f * mult, basis, grid)
            c = np.linalg.solve(G, resid)
            mult = mult + np.tensordot(c, basis, axes=1)
        out = f * mult
        neg = out < 0
        if not neg.any():
            return out, clipped
        clipped += int(neg.sum())
        f = np.where(neg, 0.0, out)
    raise NumericalFailure(f"projection still negative after {rounds} rounds")


def relative_drift(stats: DensityStats, target: DensityStats) -> np.ndarray:
    """Drift of ``(mass, momentum, energy)``; momentum is scaled by ``sqrt(mass * energy)``."""
    scale = np.array([abs(target.mass)] + [math.sqrt(abs(target.mass * target.energy))] * 3 + [abs(target.energy)])
    return (stats.as_vector() - target.as_vector()) / scale


# -- stepping -----------------------------------------------------------------


@dataclass
class StepReport:
    t: float
    dt: float
    drift: np.ndarray
    post_drift: np.ndarray
    clip_count: int
    max_abs_dtg: float
    projection_change: float
    entropy_before: float
    entropy_after: float


@dataclass
class SolverState:
    """Everything needed to continue a run bit-exactly."""

    t: float
    g: np.ndarray
    target: DensityStats
    step: int = 0


def step_once(g: np.ndarray, dt: float, grid: GridSpec, config: SolverConfig, target: DensityStats, t: float = 0.0,
              k1: np.ndarray | None = None):
    """One Heun step followed by clipping and (optionally) conservative projection.

    ``k1`` may carry ``d/dt g`` at the start of the step if it is already known.
    Returns ``(g_next, report)``.
    """
    if k1 is None:
        k1 = rhs(g, grid, config.rule)
    g1 = g + dt * k1
    k2 = rhs(g1, grid, config.rule)
    g_next = g + 0.5 * dt * (k1 + k2)
    if not np.all(np.isfinite(g_next)):
        raise NumericalFailure(f"non-finite values at t={t + dt:.6g}")
    neg = g_next < 0
    clip_count = int(neg.sum())
    if clip_count:
        g_next = np.where(neg, 0.0, g_next)
    drift = relative_drift(conserved_triple_fast(g_next, grid), target)
    change = 0.0
    if config.projection:
        projected, extra = conservative_projection(g_next, grid, target, config.projection_rounds)
        clip_count += extra
        change = float(integrate(np.abs(projected - g_next), grid))
        g_next = projected
    post = relative_drift(conserved_triple_fast(g_next, grid), target)
    report = StepReport(
        t=t + dt,
        dt=dt,
        drift=drift,
        post_drift=post,
        clip_count=clip_count,
        max_abs_dtg=float(np.max(np.abs(k1))),
        projection_change=change,
        entropy_before=entropy(g, grid),
        entropy_after=entropy(g_next, grid),
    )
    return g_next, report


def conserved_triple_fast(f, grid) -> DensityStats:
    m = integrate(f * _basis(grid), grid)
    return DensityStats(mass=float(m[0]), momentum=(float(m[1]), float(m[2]), float(m[3])), energy=float(m[4]))


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    samples: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)
    reports: list = field(default_factory=list)
    final: SolverState | None = None


def sample_schedule(T: float, cadence: int = 20) -> np.ndarray:
    """``cadence`` uniform sample times in ``[0, T]`` (just ``[0]`` when ``T = 0``)."""
    if T == 0:
        return np.array([0.0])
    return np.linspace(0.0, T, max(int(cadence), 2))


def initial_state(g0: np.ndarray, grid: GridSpec, moment_orders=()) -> SolverState:
    return SolverState(t=0.0, g=np.array(g0, dtype=float), target=conserved_triple(g0, grid, moment_orders))


Observer = Callable[[float, np.ndarray, "StepReport | None"], None]


def evolve(g0: np.ndarray | SolverState, grid: GridSpec, config: SolverConfig, observer: Observer | None = None,
           sample_times=None, snapshot_times=(), keep_samples: bool = False) -> Trajectory:
    """Advance to ``config.T``.

    ``g0`` may be an initial density or a :class:`SolverState` from an earlier
    run. Step sizes come from the CFL bound and are shortened to land exactly on
    every sample and snapshot time, so restarting from a state taken at one of
    those times reproduces the uninterrupted run bit for bit. ``observer`` is
    called at each sample time with ``(t, g, last_step_report)``.
    """
    state = g0 if isinstance(g0, SolverState) else initial_state(g0, grid)
    state = replace(state, g=np.array(state.g, dtype=float))
    samples = np.asarray(sample_schedule(config.T) if sample_times is None else sample_times, dtype=float)
    snaps = np.asarray(sorted(snapshot_times), dtype=float)
    stops = np.unique(np.concatenate([samples, snaps, [config.T]]))
    stops = stops[(stops >= state.t) & (stops <= config.T)]
    traj = Trajectory()

    def _record(t, g, report):
        if np.any(np.isclose(samples, t, rtol=0, atol=1e-12)):
            traj.times.append(t)
            if keep_samples:
                traj.samples.append(g.copy())
            if observer is not None:
                observer(t, g, report)
        if np.any(np.isclose(snaps, t, rtol=0, atol=1e-12)):
            traj.snapshots[t] = g.copy()

    _record(state.t, state.g, None)
    t, g = state.t, state.g
    report = None
    for stop in stops[stops > state.t + 1e-12]:
        while t < stop - 1e-14 * max(1.0, stop):
            coeffs = assemble(g, grid, config.rule)
            dt = cfl_dt(coeffs.a_bar, grid, config.cfl)
            if config.dt_max is not None:
                dt = min(dt, config.dt_max)
            remaining = stop - t
            landing = dt >= remaining * (1 - 1e-12)
            if landing:
                dt = remaining
            last = SolverState(t=t, g=g, target=state.target, step=state.step)
            try:
                g_new, report = step_once(g, dt, grid, config, state.target, t, k1=rhs(g, grid, config.rule, coeffs))
            except NumericalFailure as exc:
                exc.last_valid = last
                raise
            if config.entropy_check:
                slack = config.entropy_slack + 10.0 * report.projection_change
                if report.entropy_after > report.entropy_before + slack:
                    raise NumericalFailure(
                        f"entropy increased by {report.entropy_after - report.entropy_before:.3e} "
                        f"at t={t + dt:.6g} (allowed {slack:.3e})",
                        last_valid=last,
                    )
            traj.reports.append(report)
            t = stop if landing else t + dt
            g = g_new
            state = SolverState(t=t, g=g, target=state.target, step=state.step + 1)
        _record(t, g, report)
    traj.final = SolverState(t=t, g=g, target=state.target, step=state.step)
    return traj


# -- frozen-coefficient linear flow -------------------------------------------


def evolve_linear(u0: np.ndarray, coeffs: CoefficientPair, grid: GridSpec, T: float, c_cfl: float = 0.4,
                  stencil: str = "standard", observer: Callable[[float, np.ndarray], None] | None = None,
                  dt: float | None = None):
    """Heun integration of ``du/dt = a_bar : hess u + c_bar u`` with fixed coefficients."""
    if dt is None:
        dt = cfl_dt(coeffs.a_bar, grid, c_cfl)
    nsteps = max(1, int(math.ceil(T / dt - 1e-12))) if T > 0 else 0
    dt = T / nsteps if nsteps else 0.0
    u = np.array(u0, dtype=float)
    if observer is not None:
        observer(0.0, u)
    for n in range(nsteps):
        k1 = apply_operator(u, coeffs, grid, stencil)
        k2 = apply_operator(u + dt * k1, coeffs, grid, stencil)
        u = u + 0.5 * dt * (k1 + k2)
        if not np.all(np.isfinite(u)):
            raise NumericalFailure(f"linear flow produced non-finite values at step {n + 1}")
        if observer is not None:
            observer((n + 1) * dt, u)
    return u
