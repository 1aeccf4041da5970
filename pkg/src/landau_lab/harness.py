"""Desk-scale experiments around the weak-strong stability estimate.

Each ``run_*`` function takes an :class:`ExperimentConfig` and returns a
report dataclass whose ``to_dict`` is JSON-ready and carries the config hash.
Sampling is uniform (``output.cadence`` points in ``[0, T]``) and time
integrals of sampled quantities use the trapezoid rule.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.integrate import cumulative_trapezoid

from . import symmat
from .coefficients import coercivity_c0, ellipticity_constants
from .config import DensitySpec, ExperimentConfig
from .errors import ConfigError
from .functionals import (
    bad_term,
    entropy,
    entropy_dissipation,
    good_bad_report,
    good_term,
    holder_seminorms,
    log_derivative_envelopes,
    maxwellian_envelope,
    relative_entropy,
)
from .grid import GridSpec, conserved_triple, maxwellian, moment
from .solver import (
    assemble,
    conservative_projection,
    evolve,
    evolve_linear,
    rhs,
    sample_schedule,
)

# -- initial data -------------------------------------------------------------


def build_density(spec: DensitySpec, grid: GridSpec) -> np.ndarray:
    """Sample an initial datum on the grid (see :class:`DensitySpec`)."""
    problems = spec.violations("density")
    if problems:
        raise ConfigError("invalid initial datum", problems)
    mu = spec.effective_mu
    base = maxwellian(grid, mu, spec.mean, spec.mass)
    if spec.kind == "maxwellian":
        return base
    if spec.kind == "bimodal":
        shift = np.array([spec.separation, 0.0, 0.0])
        mean = np.asarray(spec.mean, float)
        return 0.5 * (maxwellian(grid, mu, mean + shift, spec.mass) + maxwellian(grid, mu, mean - shift, spec.mass))
    if spec.kind == "perturbed":
        bump = 1.0 + spec.amplitude * np.cos(spec.mode * np.pi * grid.v[0] / grid.L + spec.phase)
        f = base * bump
    else:  # tail
        f = base + spec.amplitude * maxwellian(grid, spec.tail_mu, spec.mean, spec.mass)
    out, _ = conservative_projection(f, grid, conserved_triple(base, grid))
    return out


def _initial_pair(config: ExperimentConfig):
    g0 = build_density(config.g0, config.grid)
    f0 = g0.copy() if config.f0 is None else build_density(config.f0, config.grid)
    return f0, g0


def _samples(config: ExperimentConfig) -> np.ndarray:
    return sample_schedule(config.solver.T, config.output.cadence)


def _evolve_samples(u0, config, times):
    return evolve(u0, config.grid, config.solver, sample_times=times, keep_samples=True).samples


def _clean(x):
    """Plain JSON-ready Python values (NaN and inf become strings)."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


@dataclass
class _Report:
    def to_dict(self) -> dict:
        return _clean(asdict(self))


# -- weak-strong --------------------------------------------------------------


@dataclass
class GronwallReport(_Report):
    config_hash: str
    times: list
    rel_entropy: list
    K1: list
    K3: list
    integral: list  # trapezoid of K1^2 + K3^2 from 0 to t
    C_star: float  # smallest C with H_t <= H_0 exp(C * integral_t) at every sample
    C_used: float  # factor * calibration (or C_star when self-calibrated)
    envelope: list
    sample_pass: list
    M_f: float
    M_g: float
    c0_hat: float
    formula_scale: float  # (1 + M_f^2 + M_g^2)(1 + 1/c0)
    rho: float

    @property
    def passed(self) -> bool:
        return all(self.sample_pass) and math.isfinite(self.C_star)

    @property
    def terminal_ratio(self) -> float:
        return self.rel_entropy[-1] / self.rel_entropy[0] if self.rel_entropy[0] > 0 else float("nan")


def fit_gronwall_constant(H, integral) -> float:
    """``max(0, max_t ln(H_t/H_0) / I_t)`` over samples with ``I_t > 0``."""
    H = np.asarray(H, float)
    integral = np.asarray(integral, float)
    if H[0] == 0:
        return 0.0 if np.all(H == 0) else float("inf")
    with np.errstate(divide="ignore"):
        logs = np.log(H[1:] / H[0])
    best = 0.0
    for lg, I in zip(logs, integral[1:]):
        if lg > 0:
            best = max(best, lg / I if I > 0 else float("inf"))
    return best


def run_weak_strong(config: ExperimentConfig) -> GronwallReport:
    grid = config.grid
    f0, g0 = _initial_pair(config)
    if not math.isfinite(relative_entropy(f0, g0, grid)):
        raise ConfigError("H(f0|g0) is infinite: f0 charges cells where g0 vanishes")
    times = _samples(config)
    fs = _evolve_samples(f0, config, times)
    gs = _evolve_samples(g0, config, times)
    ex = config.exponents
    rho = config.rho
    H, K1, K3, Mf, Mg, c0 = [], [], [], [], [], []
    for f, g in zip(fs, gs):
        H.append(relative_entropy(f, g, grid))
        env = log_derivative_envelopes(g, grid, ex.kappa, ex.nu, ex.zeta)
        K1.append(env.K1)
        K3.append(env.K3)
        Mf.append(moment(f, grid, rho - grid.gamma))
        Mg.append(moment(g, grid, rho - grid.gamma))
        c0.append(coercivity_c0(np.maximum(f, 0.0), grid)[0])
    K1, K3 = np.array(K1), np.array(K3)
    integral = cumulative_trapezoid(K1**2 + K3**2, times, initial=0.0)
    c_star = fit_gronwall_constant(H, integral)
    cal = config.tolerance("gronwall_calibration")
    c_used = config.tolerance("envelope_factor") * (c_star if cal is None else cal)
    H0 = H[0]
    envelope = [H0 * math.exp(c_used * I) for I in integral]
    tol = config.tolerance("identical_rel_entropy") if H0 == 0 else 0.0
    ok = [h <= e * (1 + 1e-12) + tol for h, e in zip(H, envelope)]
    M_f, M_g, c0_hat = max(Mf), max(Mg), min(c0)
    return GronwallReport(
        config_hash=config.config_hash(),
        times=list(times),
        rel_entropy=H,
        K1=list(K1),
        K3=list(K3),
        integral=list(integral),
        C_star=c_star,
        C_used=c_used,
        envelope=envelope,
        sample_pass=ok,
        M_f=M_f,
        M_g=M_g,
        c0_hat=c0_hat,
        formula_scale=(1 + M_f**2 + M_g**2) * (1 + 1 / c0_hat),
        rho=rho,
    )


# -- entropy identity ---------------------------------------------------------


@dataclass
class IdentityReport(_Report):
    times: list
    rel_entropy: list
    good: list
    bad: list
    midpoints: list
    slope: list
    rhs_mid: list  # trapezoid average of -G + B over each window
    residual: list  # slope - rhs_mid
    max_abs_residual: float
    tolerance: float
    direction_ok: list
    bad_bound_ok: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.direction_ok) and all(self.bad_bound_ok)


def check_entropy_identity(fs, gs, times, grid: GridSpec, slack: float = 1e-2, method: str = "fft",
                           rho: float | None = None) -> IdentityReport:
    """Compare the finite-difference slope of ``H(f_t|g_t)`` with ``-G + B`` on each window.

    The inequality direction ``slope <= -G + B + tol`` is checked with
    ``tol = slack * max |-G + B|``. When ``rho`` is given the bad-term bound is
    also evaluated at every sample.
    """
    times = np.asarray(times, float)
    H = np.array([relative_entropy(f, g, grid) for f, g in zip(fs, gs)])
    G = np.array([good_term(f, g, grid, method) for f, g in zip(fs, gs)])
    B = np.array([bad_term(f, g, grid, method) for f, g in zip(fs, gs)])
    rate = -G + B
    slope = np.diff(H) / np.diff(times)
    mid = 0.5 * (rate[1:] + rate[:-1])
    r = slope - mid
    tol = slack * float(np.max(np.abs(rate))) if len(rate) else 0.0
    tol = max(tol, 1e-10)
    bounds = []
    if rho is not None:
        bounds = [good_bad_report(f, g, grid, rho, method=method).bad_holds() for f, g in zip(fs, gs)]
    return IdentityReport(
        times=list(times),
        rel_entropy=list(H),
        good=list(G),
        bad=list(B),
        midpoints=list(0.5 * (times[1:] + times[:-1])),
        slope=list(slope),
        rhs_mid=list(mid),
        residual=list(r),
        max_abs_residual=float(np.max(np.abs(r))) if len(r) else 0.0,
        tolerance=tol,
        direction_ok=[bool(x <= tol) for x in r],
        bad_bound_ok=bounds,
    )


def run_entropy_identity(config: ExperimentConfig, window: float | None = None, with_bounds: bool = True) -> IdentityReport:
    """Evolve ``f`` and ``g`` with one solver step per window and check the identity.

    ``window`` defaults to ``T / (cadence - 1)``; the solver step is capped at
    the window so halving the window also halves the step.
    """
    T = config.solver.T
    if window is None:
        window = T / (config.output.cadence - 1)
    n = max(1, int(round(T / window)))
    times = np.linspace(0.0, T, n + 1)
    solver = replace(config.solver, dt_max=T / n)
    cfg = replace(config, solver=solver)
    f0, g0 = _initial_pair(cfg)
    fs = _evolve_samples(f0, cfg, times)
    gs = _evolve_samples(g0, cfg, times)
    return check_entropy_identity(fs, gs, times, config.grid, config.tolerance("identity_slack"),
                                  rho=config.rho if with_bounds else None)


@dataclass
class RefinementReport(_Report):
    coarse_N: int
    fine_N: int
    coarse_window: float
    coarse_max_residual: float
    fine_max_residual: float
    ratio: float
    coarse: dict
    fine: dict


def entropy_identity_refinement(config: ExperimentConfig, window: float | None = None) -> RefinementReport:
    """Run the identity check on the configured grid and on ``2N`` with the window halved."""
    T = config.solver.T
    if window is None:
        window = T / (config.output.cadence - 1)
    coarse = run_entropy_identity(config, window, with_bounds=False)
    fine_grid = GridSpec(config.grid.L, 2 * config.grid.N, config.grid.gamma)
    fine = run_entropy_identity(replace(config, grid=fine_grid), window / 2, with_bounds=False)
    ratio = coarse.max_abs_residual / fine.max_abs_residual if fine.max_abs_residual > 0 else float("inf")
    return RefinementReport(
        coarse_N=config.grid.N,
        fine_N=fine_grid.N,
        coarse_window=window,
        coarse_max_residual=coarse.max_abs_residual,
        fine_max_residual=fine.max_abs_residual,
        ratio=ratio,
        coarse=coarse.to_dict(),
        fine=fine.to_dict(),
    )


# -- Maxwellian and moment propagation ----------------------------------------


@dataclass
class MaxwellPropagationReport(_Report):
    config_hash: str
    mu: float
    radius: float
    times: list
    k_lo: list
    K_hi: list
    lo_ratio: list
    hi_ratio: list
    corridor: tuple

    @property
    def passed(self) -> bool:
        lo, hi = self.corridor
        return all(lo <= r <= hi for r in self.lo_ratio + self.hi_ratio)


def run_maxwellian_propagation(config: ExperimentConfig, radius_fraction: float = 0.8) -> MaxwellPropagationReport:
    grid = config.grid
    mu = config.g0.effective_mu
    times = _samples(config)
    gs = _evolve_samples(build_density(config.g0, grid), config, times)
    envs = [maxwellian_envelope(g, grid, mu, radius_fraction) for g in gs]
    k = [e.k_lo for e in envs]
    K = [e.K_hi for e in envs]
    return MaxwellPropagationReport(
        config_hash=config.config_hash(),
        mu=mu,
        radius=envs[0].radius,
        times=list(times),
        k_lo=k,
        K_hi=K,
        lo_ratio=[x / k[0] for x in k],
        hi_ratio=[x / K[0] for x in K],
        corridor=(config.tolerance("corridor_low"), config.tolerance("corridor_high")),
    )


@dataclass
class MomentReport(_Report):
    config_hash: str
    order: float
    times: list
    moment_g: list
    moment_f: list
    growth_g: float
    growth_f: float
    factor: float

    @property
    def passed(self) -> bool:
        return self.growth_g <= self.factor and self.growth_f <= self.factor


def run_moment_propagation(config: ExperimentConfig) -> MomentReport:
    grid = config.grid
    order = config.rho - grid.gamma
    times = _samples(config)
    f0, g0 = _initial_pair(config)
    mg = [moment(g, grid, order) for g in _evolve_samples(g0, config, times)]
    mf = mg if config.f0 is None else [moment(f, grid, order) for f in _evolve_samples(f0, config, times)]
    return MomentReport(
        config_hash=config.config_hash(),
        order=order,
        times=list(times),
        moment_g=mg,
        moment_f=mf,
        growth_g=max(mg) / mg[0],
        growth_f=max(mf) / mf[0],
        factor=config.tolerance("moment_factor"),
    )


# -- maximum principle --------------------------------------------------------


@dataclass
class MaxPrincipleReport(_Report):
    config_hash: str
    mu: float
    Lambda_hat: float
    Lambda_used: float
    c_bar_sup: float
    omega_sub: float
    omega_sup: float
    k: float
    K: float
    max_sub: float  # sup_t max (u) for u0 = k psi - g
    max_sup: float  # sup_t max (u) for u0 = g - K psi
    barrier_sub: float  # sup_t max (k psi_t - v_t)
    barrier_sup: float  # sup_t max (v_t - K psi_t)
    control_min_max: float  # inf_t max (u) for u0 = +psi
    tolerance: float

    @property
    def passed(self) -> bool:
        worst = max(self.max_sub, self.max_sup, self.barrier_sub, self.barrier_sup)
        return worst <= self.tolerance and self.control_min_max >= 0


def _sup_over_time(u0, coeffs, grid, T, stencil, view=None):
    """``sup_t max(view(t, u_t))`` along the frozen linear flow (``view`` defaults to ``u``)."""
    best = [-np.inf]

    def obs(t, u):
        best[0] = max(best[0], float(np.max(u if view is None else view(t, u))))

    evolve_linear(u0, coeffs, grid, T, stencil=stencil, observer=obs)
    return best[0]


def run_maximum_principle(config: ExperimentConfig, g: np.ndarray | None = None) -> MaxPrincipleReport:
    """Sign preservation of the frozen linear flow ``du/dt = a_bar : hess u + c_bar u``.

    Coefficients are assembled once from the reference ``g`` (default: the
    configured ``g0``). Differences ``k psi - g`` and ``g - K psi`` with
    ``psi = exp(-mu |v|^2)`` evolve under the monotone stencil. The barrier
    checks evolve ``v`` from ``g`` with the log stencil and compare it to
    ``k exp(omega_sub t) psi`` and ``K exp(omega_sup t) psi``.
    """
    grid = config.grid
    if g is None:
        g = build_density(config.g0, grid)
    mu = config.g0.effective_mu
    T = config.solver.T
    coeffs = assemble(g, grid, config.solver.rule)
    el = ellipticity_constants(coeffs.a_bar, grid)
    Lam = el["Lambda_hat"]
    # the supersolution needs v^T a_bar v <= Lambda; Lambda_hat bounds it only when gamma <= -2
    lam_used = max(Lam, float(np.max(symmat.quadratic_form(coeffs.a_bar, grid.v))))
    c_sup = float(np.max(np.abs(coeffs.c_bar)))
    omega_sub = -6.0 * Lam * mu
    omega_sup = 4.0 * mu * mu * lam_used + c_sup
    psi = np.exp(-mu * grid.speed2)
    ratio = g / psi
    k, K = float(ratio.min()), float(ratio.max())
    sub = _sup_over_time(k * psi - g, coeffs, grid, T, "monotone")
    sup = _sup_over_time(g - K * psi, coeffs, grid, T, "monotone")
    bar_sub = _sup_over_time(g, coeffs, grid, T, "log", lambda t, v: k * math.exp(omega_sub * t) * psi - v)
    bar_sup = _sup_over_time(g, coeffs, grid, T, "log", lambda t, v: v - K * math.exp(omega_sup * t) * psi)
    ctrl = [np.inf]
    evolve_linear(psi, coeffs, grid, T, stencil="monotone", observer=lambda t, u: ctrl.__setitem__(0, min(ctrl[0], float(u.max()))))
    return MaxPrincipleReport(
        config_hash=config.config_hash(),
        mu=mu,
        Lambda_hat=Lam,
        Lambda_used=lam_used,
        c_bar_sup=c_sup,
        omega_sub=omega_sub,
        omega_sup=omega_sup,
        k=k,
        K=K,
        max_sub=sub,
        max_sup=sup,
        barrier_sub=bar_sub,
        barrier_sup=bar_sup,
        control_min_max=ctrl[0],
        tolerance=config.tolerance("max_principle"),
    )


# -- interpolation inequalities -----------------------------------------------


@dataclass(frozen=True)
class AnalyticField:
    """Scalar field with closed-form gradient and Hessian on ``(3, ...)`` point arrays."""

    name: str
    value: object
    grad: object
    hess: object


def _gaussian(s, c=(0.0, 0.0, 0.0)):
    c = np.asarray(c, float).reshape(3, *([1] * 3))

    def val(x):
        d = x - c.reshape((3,) + (1,) * (x.ndim - 1))
        return np.exp(-np.sum(d * d, axis=0) / (2 * s * s))

    def grad(x):
        d = x - c.reshape((3,) + (1,) * (x.ndim - 1))
        return -d / (s * s) * val(x)

    def hess(x):
        d = x - c.reshape((3,) + (1,) * (x.ndim - 1))
        u = val(x)
        return np.stack([(d[i] * d[j] / s**4 - (i == j) / s**2) * u for i, j in _PAIRS])

    return AnalyticField(f"gaussian(s={s}, c={tuple(c.ravel())})", val, grad, hess)


def _poly_gaussian(s, axis=0, power=1):
    """``x_axis^power exp(-|x|^2 / 2 s^2)``."""
    g = _gaussian(s)

    def val(x):
        return x[axis] ** power * g.value(x)

    def grad(x):
        e = np.zeros_like(x)
        e[axis] = power * x[axis] ** (power - 1)
        return e * g.value(x) + x[axis] ** power * g.grad(x)

    def hess(x):
        p = x[axis] ** power
        dp = power * x[axis] ** (power - 1)
        ddp = power * (power - 1) * x[axis] ** (power - 2) if power >= 2 else 0.0 * x[axis]
        gv, gg, gh = g.value(x), g.grad(x), g.hess(x)
        out = []
        for k, (i, j) in enumerate(_PAIRS):
            term = p * gh[k]
            if i == axis:
                term = term + dp * gg[j]
            if j == axis:
                term = term + dp * gg[i]
            if i == axis and j == axis:
                term = term + ddp * gv
            out.append(term)
        return np.stack(out)

    return AnalyticField(f"x{axis}^{power} gaussian(s={s})", val, grad, hess)


def _trig(freq, axis=0):
    def val(x):
        return np.sin(freq * x[axis])

    def grad(x):
        e = np.zeros_like(x)
        e[axis] = freq * np.cos(freq * x[axis])
        return e

    def hess(x):
        out = np.zeros((6,) + x.shape[1:])
        out[[0, 3, 5][axis]] = -freq * freq * np.sin(freq * x[axis])
        return out

    return AnalyticField(f"sin({freq} x{axis})", val, grad, hess)


def _bump(freq, s):
    """``cos(freq x_0) cos(freq x_1) exp(-|x|^2 / 2 s^2)`` written through products."""
    g = _gaussian(s)

    def c(x):
        return np.cos(freq * x[0]) * np.cos(freq * x[1])

    def dc(x):
        return np.stack([-freq * np.sin(freq * x[0]) * np.cos(freq * x[1]),
                         -freq * np.cos(freq * x[0]) * np.sin(freq * x[1]),
                         np.zeros_like(x[0])])

    def ddc(x):
        f2 = freq * freq
        xx = -f2 * c(x)
        xy = f2 * np.sin(freq * x[0]) * np.sin(freq * x[1])
        z = np.zeros_like(x[0])
        return np.stack([xx, xy, z, xx, z, z])

    def val(x):
        return c(x) * g.value(x)

    def grad(x):
        return dc(x) * g.value(x) + c(x) * g.grad(x)

    def hess(x):
        gv, gg, gh = g.value(x), g.grad(x), g.hess(x)
        dcx, ddcx, cx = dc(x), ddc(x), c(x)
        return np.stack([ddcx[k] * gv + dcx[i] * gg[j] + dcx[j] * gg[i] + cx * gh[k] for k, (i, j) in enumerate(_PAIRS)])

    return AnalyticField(f"trig bump(freq={freq}, s={s})", val, grad, hess)


_PAIRS = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))


def constant_field(c: float = 1.0) -> AnalyticField:
    return AnalyticField(
        f"constant({c})",
        lambda x: np.full(x.shape[1:], c),
        lambda x: np.zeros_like(x),
        lambda x: np.zeros((6,) + x.shape[1:]),
    )


def default_corpus() -> list:
    return [
        constant_field(1.0),
        _trig(1.0),
        _trig(2.0, axis=1),
        _gaussian(0.5),
        _gaussian(1.0),
        _gaussian(2.0),
        _gaussian(1.0, (0.5, -0.25, 0.0)),
        _poly_gaussian(1.0, 0, 1),
        _poly_gaussian(1.0, 1, 2),
        _poly_gaussian(0.7, 2, 3),
        _bump(1.5, 1.0),
        _bump(3.0, 1.5),
    ]


def gaussian_corpus() -> list:
    return [_gaussian(s) for s in (0.5, 0.75, 1.0, 1.5, 2.0)] + [_gaussian(1.0, (0.5, -0.25, 0.0))]


@dataclass
class FieldNorms:
    name: str
    sup: float
    grad_sup: float
    hess_sup: float
    holder: dict  # alpha -> [u]_alpha
    grad_holder: dict  # alpha -> [grad u]_alpha


def field_norms(field_: AnalyticField, R: float, alphas, n_sup: int = 41, n_holder: int = 16) -> FieldNorms:
    """Sup norms from the closed forms on a fine lattice of ``[-R, R]^3`` (vertices included);
    Hoelder seminorms from node pairs of an ``n_holder^3`` cell-centred grid."""
    ax = np.linspace(-R, R, n_sup)
    x = np.stack(np.meshgrid(ax, ax, ax, indexing="ij"))
    u = field_.value(x)
    gnorm = np.sqrt(np.sum(field_.grad(x) ** 2, axis=0))
    hnorm = np.max(np.abs(symmat.eigvalsh(field_.hess(x))), axis=0)
    box = GridSpec(R, n_holder, -3.0)
    uh = field_.value(box.v)
    gh = field_.grad(box.v)
    holder = holder_seminorms(uh, box, alphas)
    grad_holder = holder_seminorms(gh, box, alphas)
    return FieldNorms(field_.name, float(np.max(np.abs(u))), float(gnorm.max()), float(hnorm.max()), holder, grad_holder)


def _needed(lhs, first, rest_scale):
    """Smallest ``C >= 0`` with ``lhs <= first + C * rest_scale``."""
    excess = lhs - first
    if excess <= 0:
        return 0.0
    return excess / rest_scale if rest_scale > 0 else float("inf")


def interpolation_constants(n: FieldNorms, eps, alpha: float, beta: float) -> dict:
    """Smallest constant for each of the four inequalities at every ``eps``."""
    out = {"grad_hess": [], "grad_holder": [], "holder_holder": [], "holder_grad": []}
    for e in eps:
        out["grad_hess"].append(_needed(n.grad_sup, e * n.hess_sup, n.sup / e))
        out["grad_holder"].append(_needed(n.grad_sup, e**alpha * n.grad_holder[alpha], n.sup / e))
        out["holder_holder"].append(_needed(n.holder[alpha], e ** (beta - alpha) * n.holder[beta], n.sup * e**-alpha))
        out["holder_grad"].append(_needed(n.holder[alpha], e ** (1 - alpha) * n.grad_sup, n.sup * e**-alpha))
    return out


@dataclass
class InterpolationReport(_Report):
    R: float
    eps: list
    alphas: list
    table: list  # one row per (field, alpha): name, alpha, beta, worst constant per inequality
    C_min: float  # smallest corpus-wide constant that works
    C_allowed: float

    @property
    def passed(self) -> bool:
        return self.C_min <= self.C_allowed


def run_interpolation_suite(corpus=None, R: float = 3.0, eps=None, alphas=(0.25, 0.5, 0.75),
                            C_allowed: float = 10.0, n_sup: int = 41, n_holder: int = 16) -> InterpolationReport:
    corpus = default_corpus() if corpus is None else corpus
    eps = list(R * 2.0 ** -np.arange(1, 13)) if eps is None else list(eps)
    if any(not 0 < e < R for e in eps):
        raise ValueError("every eps must lie in (0, R)")
    betas = {a: 0.5 * (a + 1.0) for a in alphas}
    wanted = sorted(set(alphas) | set(betas.values()))
    rows, worst = [], 0.0
    for fld in corpus:
        norms = field_norms(fld, R, wanted, n_sup, n_holder)
        for a in alphas:
            need = interpolation_constants(norms, eps, a, betas[a])
            row = {"field": fld.name, "alpha": a, "beta": betas[a]}
            row.update({k: max(v) for k, v in need.items()})
            worst = max(worst, *(max(v) for v in need.values()))
            rows.append(row)
    return InterpolationReport(R=R, eps=eps, alphas=list(alphas), table=rows, C_min=worst, C_allowed=C_allowed)


def run_interpolation(config: ExperimentConfig) -> InterpolationReport:
    return run_interpolation_suite(C_allowed=config.tolerance("interpolation_C"))


# -- per-sample diagnostics ---------------------------------------------------


def diagnostic_row(t: float, g: np.ndarray, grid: GridSpec, config: ExperimentConfig, f: np.ndarray | None = None,
                   clip_count: int = 0, method: str = "fft") -> dict:
    """One time-series row for the evolved ``g`` (relative columns compare ``f`` to ``g``)."""
    nan = float("nan")
    stats = conserved_triple(g, grid)
    coeffs = assemble(g, grid, config.solver.rule)
    el = ellipticity_constants(coeffs.a_bar, grid)
    ex = config.exponents
    env = log_derivative_envelopes(g, grid, ex.kappa, ex.nu, ex.zeta, dtg=rhs(g, grid, config.solver.rule, coeffs))
    mw = maxwellian_envelope(g, grid, config.g0.effective_mu)
    other = g if f is None else f
    row = {
        "t": t,
        "mass": stats.mass,
        "mom_x": stats.momentum[0],
        "mom_y": stats.momentum[1],
        "mom_z": stats.momentum[2],
        "energy": stats.energy,
        "entropy": entropy(g, grid),
        "dissipation": entropy_dissipation(g, grid, method),
        "rel_entropy": nan,
        "good_term": nan,
        "bad_term": nan,
        "K1": env.K1,
        "K2": env.K2,
        "K3": env.K3,
        "lambda_hat": el["lambda_hat"],
        "Lambda_hat": el["Lambda_hat"],
        "c0_hat": coercivity_c0(np.maximum(other, 0.0), grid)[0],
        "env_klo": mw.k_lo,
        "env_Khi": mw.K_hi,
        "clip_count": clip_count,
    }
    if f is not None:
        row["rel_entropy"] = relative_entropy(f, g, grid)
        row["good_term"] = good_term(f, g, grid, method)
        row["bad_term"] = bad_term(f, g, grid, method)
    return row


RUNNERS = {
    "weak_strong": run_weak_strong,
    "entropy_identity": run_entropy_identity,
    "maxwellian_propagation": run_maxwellian_propagation,
    "moment_propagation": run_moment_propagation,
    "maximum_principle": run_maximum_principle,
    "interpolation": run_interpolation,
}


def run_experiment(name: str, config: ExperimentConfig):
    try:
        runner = RUNNERS[name]
    except KeyError:
        raise ConfigError(f"unknown experiment {name!r}", [f"known: {', '.join(RUNNERS)}"]) from None
    return runner(config)


__all__ = [
    "build_density",
    "check_entropy_identity",
    "diagnostic_row",
    "entropy_identity_refinement",
    "run_entropy_identity",
    "run_experiment",
    "run_interpolation_suite",
    "run_maximum_principle",
    "run_maxwellian_propagation",
    "run_moment_propagation",
    "run_weak_strong",
]
