"""Cell-centred velocity grid, midpoint quadrature and finite differences.

Fields are plain ``numpy`` arrays. A scalar field has shape ``(N, N, N)``
(C order, so the flat index is ``(ix*N + iy)*N + iz``), a vector field
``(3, N, N, N)`` and a symmetric matrix field ``(6, N, N, N)`` holding the
upper triangle in the order xx, xy, xz, yy, yz, zz.

Derivatives use second-order central stencils on a grid extended by one
ghost layer per side. Ghost values of a plain field come from linear
extrapolation along each axis. The *log* variants work on ``ln f`` and
extrapolate it quadratically, so every log stencil is exact for Gaussians up
to and including the boundary layer.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigError

#: Upper-triangle component order of a symmetric matrix field.
SYM_PAIRS = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))


@dataclass(frozen=True)
class GridSpec:
    """Truncated box ``[-L, L]^3`` with ``N`` cells per axis and exponent ``gamma``."""

    L: float
    N: int
    gamma: float

    def __post_init__(self):
        problems = []
        if not np.isfinite(self.L) or self.L <= 0:
            problems.append(f"half_width L must be > 0, got {self.L}")
        if int(self.N) != self.N:
            problems.append(f"points_per_axis N must be an integer, got {self.N}")
        else:
            if self.N % 2:
                problems.append(f"points_per_axis N must be even, got odd N={self.N}")
            if self.N < 8:
                problems.append(f"points_per_axis N must be >= 8, got {self.N}")
        if not (-3.0 <= self.gamma < 0.0):
            problems.append(f"gamma must lie in [-3, 0), got {self.gamma}")
        if problems:
            raise ConfigError("invalid grid", problems)
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def cell_volume(self) -> float:
        return self.h**3

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.N, self.N, self.N)

    @cached_property
    def axis(self) -> np.ndarray:
        x = -self.L + (np.arange(self.N) + 0.5) * self.h
        x.setflags(write=False)
        return x

    @cached_property
    def v(self) -> np.ndarray:
        """Node coordinates, shape ``(3, N, N, N)``."""
        out = np.stack(np.meshgrid(self.axis, self.axis, self.axis, indexing="ij"))
        out.setflags(write=False)
        return out

    @cached_property
    def speed2(self) -> np.ndarray:
        """``|v|^2`` at every node."""
        out = np.einsum("i...,i...->...", self.v, self.v)
        out.setflags(write=False)
        return out

    def node(self, index) -> np.ndarray:
        ix, iy, iz = index
        return np.array([self.axis[ix], self.axis[iy], self.axis[iz]])

    def nearest_node(self, point) -> tuple[int, int, int]:
        idx = np.clip(np.floor((np.asarray(point, float) + self.L) / self.h), 0, self.N - 1)
        return tuple(int(i) for i in idx)

    def to_dict(self) -> dict:
        return {"L": self.L, "N": self.N, "gamma": self.gamma}


def make_grid(L: float, N: int, gamma: float) -> GridSpec:
    return GridSpec(L, N, gamma)


@dataclass
class DensityStats:
    """Mass, momentum, energy (``int f |v|^2``), entropy and a moment table."""

    mass: float
    momentum: tuple[float, float, float]
    energy: float
    entropy: float = float("nan")
    moments: dict = field(default_factory=dict)

    def as_vector(self) -> np.ndarray:
        return np.array([self.mass, *self.momentum, self.energy])

    def to_dict(self) -> dict:
        return {
            "mass": self.mass,
            "momentum": list(self.momentum),
            "energy": self.energy,
            "entropy": self.entropy,
            "moments": {str(k): v for k, v in self.moments.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DensityStats":
        return cls(
            mass=d["mass"],
            momentum=tuple(d["momentum"]),
            energy=d["energy"],
            entropy=d.get("entropy", float("nan")),
            moments={float(k): v for k, v in d.get("moments", {}).items()},
        )


# -- quadrature ---------------------------------------------------------------


def integrate(f: np.ndarray, grid: GridSpec) -> float | np.ndarray:
    """Midpoint rule over the box. Leading axes of ``f`` are kept."""
    return grid.cell_volume * np.sum(f, axis=(-3, -2, -1))


def weight_field(grid: GridSpec, k: float) -> np.ndarray:
    """Japanese bracket power ``(1 + |v|^2)^(k/2)``."""
    return (1.0 + grid.speed2) ** (0.5 * k)


def moment(f: np.ndarray, grid: GridSpec, k: float) -> float:
    return float(integrate(f * weight_field(grid, k), grid))


def conserved_triple(f: np.ndarray, grid: GridSpec, moment_orders=()) -> DensityStats:
    from .functionals import entropy

    return DensityStats(
        mass=float(integrate(f, grid)),
        momentum=tuple(float(m) for m in integrate(f * grid.v, grid)),
        energy=float(integrate(f * grid.speed2, grid)),
        entropy=entropy(f, grid),
        moments={float(k): moment(f, grid, k) for k in moment_orders},
    )


def maxwellian(grid: GridSpec, mu: float = 0.5, mean=(0.0, 0.0, 0.0), mass: float = 1.0) -> np.ndarray:
    """``mass * (mu/pi)^(3/2) exp(-mu |v - mean|^2)`` sampled at the nodes."""
    d = grid.v - np.asarray(mean, float).reshape(3, 1, 1, 1)
    r2 = np.einsum("i...,i...->...", d, d)
    return mass * (mu / np.pi) ** 1.5 * np.exp(-mu * r2)


# -- finite differences -------------------------------------------------------


def extend(f: np.ndarray, order: int = 1) -> np.ndarray:
    """Pad the last three axes by one ghost layer using polynomial extrapolation.

    ``order=0`` copies the edge value, ``order=1`` is linear (``2 u_0 - u_1``), ``order=2`` quadratic
    (``3 u_0 - 3 u_1 + u_2``). Axes are filled in turn so edge and corner
    ghosts extrapolate from already-extended faces.
    """
    coef = {0: (1.0,), 1: (2.0, -1.0), 2: (3.0, -3.0, 1.0)}[order]
    out = f
    for ax in (-3, -2, -1):
        lo = sum(c * np.take(out, [k], axis=ax) for k, c in enumerate(coef))
        hi = sum(c * np.take(out, [-1 - k], axis=ax) for k, c in enumerate(coef))
        out = np.concatenate([lo, out, hi], axis=ax)
    return out


def _shift(e: np.ndarray, offsets) -> np.ndarray:
    """Interior view of an extended array shifted by ``offsets`` (each -1, 0 or 1)."""
    sl = tuple(slice(1 + o, e.shape[-3 + k] - 1 + o) for k, o in enumerate(offsets))
    return e[(Ellipsis, *sl)]


_UNIT = ((1, 0, 0), (0, 1, 0), (0, 0, 1))


def _gradient_ext(e: np.ndarray, h: float) -> np.ndarray:
    return np.stack(
        [(_shift(e, u) - _shift(e, tuple(-c for c in u))) / (2.0 * h) for u in _UNIT]
    )


def _hessian_ext(e: np.ndarray, h: float) -> np.ndarray:
    c = _shift(e, (0, 0, 0))
    comps = []
    for i, j in SYM_PAIRS:
        if i == j:
            u = _UNIT[i]
            m = tuple(-k for k in u)
            comps.append((_shift(e, u) - 2.0 * c + _shift(e, m)) / h**2)
        else:
            pp = tuple(_UNIT[i][k] + _UNIT[j][k] for k in range(3))
            pm = tuple(_UNIT[i][k] - _UNIT[j][k] for k in range(3))
            comps.append(
                (_shift(e, pp) - _shift(e, pm) - _shift(e, tuple(-k for k in pm)) + _shift(e, tuple(-k for k in pp)))
                / (4.0 * h**2)
            )
    return np.stack(comps)


def gradient(f: np.ndarray, grid: GridSpec) -> np.ndarray:
    return _gradient_ext(extend(f), grid.h)


def hessian(f: np.ndarray, grid: GridSpec) -> np.ndarray:
    return _hessian_ext(extend(f), grid.h)


def _log_ext(f: np.ndarray) -> np.ndarray:
    # quadratic in ln f, so Gaussians are reproduced exactly in the ghost layer
    with np.errstate(divide="ignore", invalid="ignore"):
        lf = np.log(f)
        return extend(lf, order=2)


def log_gradient(f: np.ndarray, grid: GridSpec) -> np.ndarray:
    """``grad ln f`` by central differences of ``ln f``; NaN/inf where ``f`` is not positive on the stencil."""
    with np.errstate(invalid="ignore"):
        return _gradient_ext(_log_ext(f), grid.h)


def log_hessian(f: np.ndarray, grid: GridSpec) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        return _hessian_ext(_log_ext(f), grid.h)


def _all_finite(a: np.ndarray) -> np.ndarray:
    return np.all(np.isfinite(a), axis=0)


def sqrt_gradient(f: np.ndarray, grid: GridSpec) -> np.ndarray:
    """``grad sqrt(f)``.

    Uses ``sqrt(f) * grad ln f / 2`` wherever the log stencil is available
    (exact on Gaussians at interior nodes), and central differences of
    ``sqrt f`` elsewhere.
    """
    s = np.sqrt(f)
    lg = log_gradient(f, grid)
    ok = _all_finite(lg) & (f > 0)
    out = 0.5 * (s * np.where(ok, lg, 0.0))
    if not ok.all():
        out = np.where(ok, out, gradient(s, grid))
    return out


def positive_hessian(f: np.ndarray, grid: GridSpec) -> np.ndarray:
    """``hess f`` written as ``f (hess ln f + grad ln f (x) grad ln f)``.

    Exact at interior nodes for Gaussians. Falls back to the plain stencil
    where ``f`` is not positive on the 27-point neighbourhood.
    """
    e = _log_ext(f)
    with np.errstate(invalid="ignore"):
        lg = _gradient_ext(e, grid.h)
        lh = _hessian_ext(e, grid.h)
        ok = _all_finite(lg) & _all_finite(lh)
        lg0 = np.where(ok, lg, 0.0)
        lh0 = np.where(ok, lh, 0.0)
        out = np.stack([f * (lh0[k] + lg0[i] * lg0[j]) for k, (i, j) in enumerate(SYM_PAIRS)])
    if not ok.all():
        out = np.where(ok, out, hessian(f, grid))
    return out
