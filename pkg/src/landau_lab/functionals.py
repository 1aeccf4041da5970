"""Entropy, dissipation, relative entropy and the good/bad splitting of its time derivative.

Double integrals over ``(v, v')`` are evaluated either as explicit pair sums
over ordered node pairs (compiled kernels, default for ``N <= 16``) or through
FFT convolutions after expanding the square. The two routes give the same
number up to rounding: the singular cell drops out of every functional here
because the integrands vanish on the diagonal.

Log-derivative quantities are evaluated only on the trusted set
``{g > tau * max g}`` where the log stencils are finite; elsewhere the
corresponding vector fields are set to zero.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from . import kernels, symmat
from .coefficients import (
    KernelKind,
    coercivity_c0,
    convolve_matrix,
    convolve_matrix_vector,
    kernel_radial,
)
from .grid import (
    GridSpec,
    gradient,
    integrate,
    log_gradient,
    log_hessian,
    moment,
    sqrt_gradient,
    weight_field,
)

TAU = 1e-12
PAIR_SUM_MAX_N = 16
# Centre weight only: the FFT forms then equal the pair sums exactly, since the
# centre cell cancels and no other offset is modified.
PAIR_RULE = "zeta0"


# -- entropy and relative entropy ---------------------------------------------


def _xlogx(f):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(f > 0, f * np.log(np.where(f > 0, f, 1.0)), 0.0)


def entropy(f: np.ndarray, grid: GridSpec) -> float:
    """``int f ln f`` with ``0 ln 0 = 0``."""
    return float(integrate(_xlogx(f), grid))


def relative_entropy(f: np.ndarray, g: np.ndarray, grid: GridSpec) -> float:
    """``int (phi ln phi - phi + 1) g`` with ``phi = f/g``; ``+inf`` if ``f > 0`` where ``g = 0``."""
    pos = g > 0
    if np.any((f > 0) & ~pos):
        return float("inf")
    with np.errstate(divide="ignore", invalid="ignore"):
        gs = np.where(pos, g, 1.0)
        phi = np.where(pos, f / gs, 0.0)
        integrand = np.where(pos, (_xlogx(phi) - phi + 1.0) * gs, 0.0)
    return float(max(integrate(integrand, grid), 0.0))


def hellinger2(f, g, grid) -> float:
    return float(integrate((np.sqrt(f) - np.sqrt(g)) ** 2, grid))


def pinsker_gap(f: np.ndarray, g: np.ndarray, grid: GridSpec, mass_tol: float = 1e-6) -> float:
    """``H(f|g) - int |sqrt f - sqrt g|^2`` for unit-mass densities."""
    for name, u in (("f", f), ("g", g)):
        m = float(integrate(u, grid))
        if abs(m - 1.0) > mass_tol:
            raise ValueError(f"{name} must have unit mass, got {m!r}")
    return relative_entropy(f, g, grid) - hellinger2(f, g, grid)


# -- trusted set and log-derivative fields ------------------------------------


def trusted_mask(g: np.ndarray, tau: float = TAU) -> np.ndarray:
    gmax = float(np.max(g))
    if gmax <= 0:
        return np.zeros(g.shape, dtype=bool)
    return g > tau * gmax


def _finite_rows(a):
    return np.all(np.isfinite(a), axis=0)


@dataclass
class RelativeFields:
    """Vector fields shared by the relative functionals.

    ``R = sqrt(f) grad ln(f/g)`` and ``q = grad ln g``, both zero off ``mask``.
    """

    s: np.ndarray
    R: np.ndarray
    q: np.ndarray
    mask: np.ndarray


def relative_fields(f, g, grid, tau: float = TAU) -> RelativeFields:
    s = np.sqrt(np.maximum(f, 0.0))
    q = log_gradient(g, grid)
    mask = trusted_mask(g, tau) & _finite_rows(q)
    q = np.where(mask, q, 0.0)
    R = 2.0 * sqrt_gradient(np.maximum(f, 0.0), grid) - s * q
    mask_f = mask & (f > 0) & _finite_rows(R)
    R = np.where(mask_f, R, 0.0)
    return RelativeFields(s=s, R=R, q=q, mask=mask_f)


def weighted_relative_fisher(f, g, grid, tau: float = TAU) -> float:
    """``int |grad ln(f/g)|^2 <v>^gamma f`` over the trusted set."""
    rf = relative_fields(f, g, grid, tau)
    return float(integrate(np.sum(rf.R**2, axis=0) * weight_field(grid, grid.gamma), grid))


def weighted_sqrt_fisher(f, grid) -> float:
    """``int |grad sqrt f|^2 <v>^gamma``."""
    P = sqrt_gradient(np.maximum(f, 0.0), grid)
    return float(integrate(np.sum(P**2, axis=0) * weight_field(grid, grid.gamma), grid))


# -- pair-sum plumbing --------------------------------------------------------


def _choose(method, grid):
    if method == "auto":
        return "pairs" if grid.N <= PAIR_SUM_MAX_N else "fft"
    if method not in ("pairs", "fft"):
        raise ValueError(f"unknown method {method!r}")
    return method


def _node_index(grid, keep=None):
    ii = np.indices(grid.shape).reshape(3, -1).T.astype(np.int64)
    if keep is None:
        return np.ascontiguousarray(ii), slice(None)
    sel = np.flatnonzero(keep.ravel())
    return np.ascontiguousarray(ii[sel]), sel


def pair_table(grid: GridSpec, kind: KernelKind) -> np.ndarray:
    """Kernel prefactor times ``h^6`` at every integer squared offset."""
    r2 = np.arange(3 * (grid.N - 1) ** 2 + 1, dtype=float)
    return np.ascontiguousarray(kernel_radial(kind, grid.gamma, grid.h**2 * r2) * grid.cell_volume**2)


def _flat(x, sel):
    if x.ndim == 4:
        return np.ascontiguousarray(x.reshape(3, -1)[:, sel].T)
    return np.ascontiguousarray(x.ravel()[sel])


def _any_nonzero(*fields):
    keep = np.zeros(fields[0].shape[-3:], dtype=bool)
    for x in fields:
        keep |= np.any(x != 0, axis=0) if x.ndim == 4 else (x != 0)
    return keep


def _quad_value(s, P, grid, method, backend=None):
    """``2 sum_{i != j} h^6 a(z) : (s_j P_i - s_i P_j)^2``."""
    if method == "pairs":
        idx, sel = _node_index(grid, _any_nonzero(s, P))
        rows = kernels.call("quad_pairs", idx, _flat(s, sel), _flat(P, sel),
                            pair_table(grid, KernelKind.FULL), backend_name=backend)
        return 2.0 * float(np.sum(rows))
    conv_s2 = convolve_matrix(s * s, grid, rule=PAIR_RULE)
    conv_sP = convolve_matrix_vector(s * P, grid, rule=PAIR_RULE)
    per_node = symmat.quadratic_form(conv_s2, P) - s * np.einsum("i...,i...->...", P, conv_sP)
    # the expanded square can cancel to a tiny negative number
    return max(4.0 * float(integrate(per_node, grid)), 0.0)


# -- dissipation and the good/bad terms ---------------------------------------


def entropy_dissipation(f: np.ndarray, grid: GridSpec, method: str = "auto", backend=None) -> float:
    """``D(f) = 2 iint |z|^(gamma+2) |Pi(z) (grad - grad') sqrt(f f')|^2``."""
    f = np.maximum(f, 0.0)
    return _quad_value(np.sqrt(f), sqrt_gradient(f, grid), grid, _choose(method, grid), backend)


def good_term(f, g, grid, method: str = "auto", tau: float = TAU, backend=None) -> float:
    """Good term ``1/2 iint a : [(grad - grad') ln(f f'/g g')]^2 f f'`` in square-root pairing."""
    rf = relative_fields(f, g, grid, tau)
    return _quad_value(rf.s, 0.5 * rf.R, grid, _choose(method, grid), backend)


def bad_term(f, g, grid, method: str = "auto", tau: float = TAU, backend=None) -> float:
    """``-iint f (f' - g') grad ln(f/g) . a(v - v') (grad - grad') ln(g g')``."""
    rf = relative_fields(f, g, grid, tau)
    U = rf.s * rf.R
    d = f - g
    method = _choose(method, grid)
    if method == "pairs":
        idx, sel = _node_index(grid, _any_nonzero(U, d, rf.q))
        rows = kernels.call("bad_pairs", idx, _flat(U, sel), _flat(rf.q, sel), _flat(d, sel),
                            pair_table(grid, KernelKind.FULL), backend_name=backend)
        return -float(np.sum(rows))
    conv_d = convolve_matrix(d, grid, rule=PAIR_RULE)
    conv_dq = convolve_matrix_vector(d * rf.q, grid, rule=PAIR_RULE)
    per_node = symmat.quadratic_form(conv_d, U, rf.q) - np.einsum("i...,i...->...", U, conv_dq)
    return -float(integrate(per_node, grid))


def _bad_cauchy_schwarz_j(f, g, rf, grid, method, backend=None) -> float:
    """``iint f <v>^-gamma (sqrt f' + sqrt g')^2 |a(v - v')(q - q')|^2`` over trusted ``v``."""
    W = np.where(rf.mask, f * weight_field(grid, -grid.gamma), 0.0)
    w = (np.sqrt(np.maximum(f, 0)) + np.sqrt(np.maximum(g, 0))) ** 2
    q = rf.q
    if method == "pairs":
        idx, sel = _node_index(grid, _any_nonzero(W, w))
        rows = kernels.call("j_pairs", idx, _flat(W, sel), _flat(w, sel), _flat(q, sel),
                            pair_table(grid, KernelKind.SQUARED), backend_name=backend)
        return float(np.sum(rows))
    kind = KernelKind.SQUARED
    cw, cW = convolve_matrix(w, grid, kind, rule=PAIR_RULE), convolve_matrix(W, grid, kind, rule=PAIR_RULE)
    cwq = convolve_matrix_vector(w * q, grid, kind, rule=PAIR_RULE)
    per_node = (
        W * symmat.quadratic_form(cw, q)
        - 2.0 * W * np.einsum("i...,i...->...", q, cwq)
        + w * symmat.quadratic_form(cW, q)
    )
    return float(max(integrate(per_node, grid), 0.0))


def _cutoff_cross(rf, grid, method, backend=None) -> float:
    """``iint a~(v - v') : U (x) U'`` with ``U = f grad ln(f/g)``."""
    U = rf.s * rf.R
    if method == "pairs":
        idx, sel = _node_index(grid, _any_nonzero(U))
        rows = kernels.call("cross_pairs", idx, _flat(U, sel), pair_table(grid, KernelKind.CUTOFF),
                            backend_name=backend)
        return float(np.sum(rows))
    cU = convolve_matrix_vector(U, grid, KernelKind.CUTOFF, rule=PAIR_RULE)
    return float(integrate(np.einsum("i...,i...->...", U, cU), grid))


# -- envelopes ----------------------------------------------------------------


@dataclass
class EnvelopeReport:
    K1: float
    K2: float
    K3: float
    kappa: float
    nu: float
    zeta: float
    tau: float
    argmax: dict = field(default_factory=dict)


def log_derivative_envelopes(g, grid, kappa=1.0, nu=1.0, zeta=2.0, dtg=None, tau: float = TAU) -> EnvelopeReport:
    """Growth constants of ``grad ln g``, ``d/dt ln g`` and ``hess ln g`` relative to ``<v>`` powers."""
    if min(kappa, nu, zeta) < 0:
        raise ValueError("envelope exponents must be non-negative")
    lg = log_gradient(g, grid)
    lh = log_hessian(g, grid)
    base = trusted_mask(g, tau)
    if not base.any():
        raise ValueError("empty trusted region")
    m1 = base & _finite_rows(lg)
    m3 = base & _finite_rows(lh)
    argmax = {}

    def _max(ratio, mask, name):
        r = np.where(mask, ratio, -np.inf)
        k = int(np.argmax(r))
        argmax[name] = tuple(int(i) for i in np.unravel_index(k, grid.shape))
        return float(max(r.ravel()[k], 0.0)) if mask.any() else float("nan")

    K1 = _max(np.sqrt(np.sum(np.where(m1, lg, 0.0) ** 2, axis=0)) / weight_field(grid, kappa), m1, "K1")
    eig = symmat.eigvalsh(np.where(m3, lh, 0.0))
    K3 = _max(np.max(np.abs(eig), axis=0) / weight_field(grid, zeta), m3, "K3")
    K2 = float("nan")
    if dtg is not None:
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.abs(dtg / g) / weight_field(grid, nu)
        K2 = _max(np.where(base, ratio, 0.0), base, "K2")
    return EnvelopeReport(K1=K1, K2=K2, K3=K3, kappa=kappa, nu=nu, zeta=zeta, tau=tau, argmax=argmax)


@dataclass
class MaxwellEnvelope:
    mu: float
    k_lo: float
    K_hi: float
    radius: float


def maxwellian_envelope(g, grid, mu: float, radius_fraction: float = 0.8) -> MaxwellEnvelope:
    """``min`` and ``max`` of ``g exp(mu |v|^2)`` on ``|v| <= radius_fraction * L``."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    radius = radius_fraction * grid.L
    inside = grid.speed2 <= radius**2
    ratio = g[inside] * np.exp(mu * grid.speed2[inside])
    return MaxwellEnvelope(mu=mu, k_lo=float(ratio.min()), K_hi=float(ratio.max()), radius=radius)


# -- good/bad report ----------------------------------------------------------


def good_constant(gamma: float, K1: float, M_f: float, M_g: float) -> float:
    """Constant ``C_good`` in ``G >= c0 F - C_good H(f|g)`` built from explicit cut-off kernel bounds.

    Uses ``|a~| <= <z>^(gamma+2)``, ``|div a~| <= 2 <z>^(gamma+1)``,
    ``|div div a~| <= 6 <z>^gamma`` and ``<z>^s <= 2^(s+/2) <v>^s+ <v'>^s+``.
    """
    pos = lambda x: max(x, 0.0)  # noqa: E731
    c_pair = 6.0 + 4.0 * 2.0 ** (pos(gamma + 1.0) / 2.0) + 2.0 ** (pos(gamma + 2.0) / 2.0)
    return 2.0 * c_pair * (1.0 + K1**2) * (M_f + M_g)


@dataclass
class GoodBadReport:
    good: float
    bad: float
    fisher: float
    c0: float
    rel_entropy: float
    cutoff_cross: float
    bad_j: float
    K1: float
    K3: float
    M_f: float
    M_g: float
    C_good: float

    @property
    def C_bad(self) -> float:
        """Constant in ``|B| <= c0 F + C_bad H(f|g)`` from Cauchy-Schwarz with the measured ``J``."""
        return self.bad_j / (4.0 * self.c0)

    @property
    def bad_bound(self) -> float:
        return self.c0 * self.fisher + self.C_bad * self.rel_entropy

    @property
    def good_lower(self) -> float:
        return self.c0 * self.fisher - self.C_good * self.rel_entropy

    def bad_holds(self, slack: float = 1e-12) -> bool:
        return abs(self.bad) <= self.bad_bound * (1 + slack) + slack

    def good_holds(self, slack: float = 1e-12) -> bool:
        return self.good >= self.good_lower - slack * (abs(self.good_lower) + 1)


def good_bad_report(f, g, grid, rho: float, kappa=1.0, zeta=2.0, method="auto", tau: float = TAU) -> GoodBadReport:
    """Good and bad terms with every constant of their lower/upper bounds measured on the grid."""
    method = _choose(method, grid)
    rf = relative_fields(f, g, grid, tau)
    env = log_derivative_envelopes(g, grid, kappa=kappa, zeta=zeta, tau=tau)
    c0, _ = coercivity_c0(np.maximum(f, 0.0), grid)
    M_f = moment(f, grid, rho - grid.gamma)
    M_g = moment(g, grid, rho - grid.gamma)
    return GoodBadReport(
        good=good_term(f, g, grid, method, tau),
        bad=bad_term(f, g, grid, method, tau),
        fisher=float(integrate(np.sum(rf.R**2, axis=0) * weight_field(grid, grid.gamma), grid)),
        c0=c0,
        rel_entropy=relative_entropy(f, g, grid),
        cutoff_cross=_cutoff_cross(rf, grid, method),
        bad_j=_bad_cauchy_schwarz_j(f, g, rf, grid, method),
        K1=env.K1,
        K3=env.K3,
        M_f=M_f,
        M_g=M_g,
        C_good=good_constant(grid.gamma, env.K1, M_f, M_g),
    )


# -- subsampled pair sums -----------------------------------------------------


def _subsample_pairs(n, fraction, seed):
    # Sobol balance needs a power of two
    m = max(4, int(np.ceil(np.log2(max(fraction * n * n, 16.0)))))
    pts = qmc.Sobol(d=2, scramble=True, seed=seed).random_base2(m)
    ij = np.minimum((pts * n).astype(np.int64), n - 1)
    return ij[:, 0], ij[:, 1]


def _quad_subsample(s, P, grid, fraction, seed):
    n = s.size
    idx, _ = _node_index(grid)
    sv, Pv = s.ravel(), P.reshape(3, -1).T
    i, j = _subsample_pairs(n, fraction, seed)
    nvec = (idx[i] - idx[j]).astype(float)
    r2 = np.einsum("ak,ak->a", nvec, nvec)
    t = pair_table(grid, KernelKind.FULL)[r2.astype(np.int64)]
    Y = sv[j, None] * Pv[i] - sv[i, None] * Pv[j]
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(r2 > 0, 1.0 / r2, 0.0)
    yn = np.einsum("ak,ak->a", Y, nvec)
    vals = 2.0 * t * (np.einsum("ak,ak->a", Y, Y) - yn * yn * inv)
    scale = float(n) * n
    return scale * float(vals.mean()), scale * float(vals.std(ddof=1)) / np.sqrt(len(vals))


def dissipation_subsample(f, grid, fraction: float = 0.01, seed: int = 0):
    """Unbiased estimate of ``D(f)`` and its standard error from a scrambled-Sobol pair sample."""
    f = np.maximum(f, 0.0)
    return _quad_subsample(np.sqrt(f), sqrt_gradient(f, grid), grid, fraction, seed)


def good_term_subsample(f, g, grid, fraction: float = 0.01, seed: int = 0, tau: float = TAU):
    rf = relative_fields(f, g, grid, tau)
    return _quad_subsample(rf.s, 0.5 * rf.R, grid, fraction, seed)


# -- Hoelder seminorm ---------------------------------------------------------


def holder_seminorms(field, grid: GridSpec, alphas, region=None, stride: int = 1) -> dict:
    """``max |phi(v) - phi(w)| / |v - w|^alpha`` over node pairs, for every ``alpha`` at once.

    Pairs come from a stride lattice, optionally restricted to the boolean
    node mask ``region``. Vector and matrix fields use the Euclidean norm of
    the component difference. The result is a lower bound for the supremum
    over the continuum.
    """
    alphas = tuple(float(a) for a in alphas)
    if any(not 0 < a < 1 for a in alphas):
        raise ValueError("alpha must lie in (0, 1)")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    field = np.asarray(field, dtype=float)
    comps = field.reshape((-1,) + grid.shape)
    sl = (slice(None),) + (slice(None, None, stride),) * 3
    vals = comps[sl].reshape(comps.shape[0], -1).T
    pts = grid.v[sl].reshape(3, -1).T
    if region is not None:
        keep = np.asarray(region)[sl[1:]].ravel()
        vals, pts = vals[keep], pts[keep]
    best = dict.fromkeys(alphas, 0.0)
    for start in range(0, len(pts), 256):
        a = slice(start, start + 256)
        # pairs (i, j) with j >= start cover every unordered pair once
        dv2 = np.sum((pts[a, None, :] - pts[None, start:, :]) ** 2, axis=-1)
        du = np.sqrt(np.sum((vals[a, None, :] - vals[None, start:, :]) ** 2, axis=-1))
        pos = dv2 > 0
        if not pos.any():
            continue
        ldv = 0.5 * np.log(dv2[pos])
        du = du[pos]
        for al in alphas:
            best[al] = max(best[al], float(np.max(du * np.exp(-al * ldv))))
    return best


def holder_seminorm(field, grid: GridSpec, alpha: float, region=None, stride: int = 1) -> float:
    """Single-exponent form of :func:`holder_seminorms`."""
    return holder_seminorms(field, grid, (alpha,), region, stride)[float(alpha)]


def log_hessian_identity_defect(g, grid, tau: float = TAU) -> np.ndarray:
    """``hess ln g - (hess g / g - grad ln g (x) grad ln g)`` with plain stencils on the right."""
    from .grid import hessian, SYM_PAIRS

    lg = gradient(np.log(np.where(g > 0, g, 1.0)), grid)
    rhs = hessian(g, grid) / np.where(g > 0, g, 1.0) - np.stack([lg[i] * lg[j] for i, j in SYM_PAIRS])
    return log_hessian(g, grid) - rhs
