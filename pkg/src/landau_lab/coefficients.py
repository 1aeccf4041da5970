"""Landau kernels and the parabolic coefficients ``a_bar = a * g`` and ``c_bar``.

Convolutions are discrete midpoint sums evaluated with real FFTs on a grid
zero-padded to ``2N`` per axis, so the circular wrap never reaches the
physical box. Kernel tables carry the ``h^3`` quadrature weight; the entry at
zero offset holds the singular-cell weight from :mod:`lattice_zeta` and, for
the default rule, the nearest neighbours carry a Hessian stencil that removes
the next term of the lattice-sum expansion.
"""
from __future__ import annotations

import enum
from functools import lru_cache

import numpy as np
import scipy.fft

from . import symmat
from .grid import SYM_PAIRS, GridSpec, weight_field
from .kernels import thread_count
from .lattice_zeta import corner_weight, fourth_moments, singular_weight

#: Singular-cell rules: ``zeta`` (centre weight plus Hessian correction),
#: ``zeta0`` (centre weight only) and ``ball`` (ball average of the kernel).
RULES = ("zeta", "zeta0", "ball")


class KernelKind(enum.Enum):
    FULL = "full"  # a(z) = |z|^(gamma+2) Pi(z)
    CUTOFF = "cutoff"  # a~(z) = <z>^gamma |z|^2 Pi(z)
    SQUARED = "squared"  # a(z)^2 = |z|^(2 gamma+4) Pi(z), used by the bad-term bound


def projection_matrix(z) -> np.ndarray:
    """``I - z z^T / |z|^2``; the zero matrix at ``z = 0``."""
    z = np.asarray(z, dtype=float)
    n2 = z @ z
    if n2 == 0.0:
        return np.zeros((3, 3))
    return np.eye(3) - np.outer(z, z) / n2


def kernel_radial(kind: KernelKind, gamma: float, r2):
    """Scalar prefactor ``k(|z|)`` with ``kernel(z) = k(|z|) Pi(z)``; zero at ``r2 = 0``."""
    r2 = np.asarray(r2, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        if kind is KernelKind.FULL:
            out = r2 ** (0.5 * (gamma + 2.0))
        elif kind is KernelKind.CUTOFF:
            out = (1.0 + r2) ** (0.5 * gamma) * r2
        elif kind is KernelKind.SQUARED:
            out = r2 ** (gamma + 2.0)
        else:
            raise ValueError(kind)
    return np.where(r2 > 0, out, 0.0)


def kernel_eval(kind: KernelKind, gamma: float, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    return kernel_radial(kind, gamma, z @ z) * projection_matrix(z)


def _singular_power(kind: KernelKind, gamma: float):
    """Homogeneity degree of the kernel near zero, or ``None`` if it is smooth."""
    if kind is KernelKind.FULL:
        return gamma + 2.0
    if kind is KernelKind.SQUARED:
        return 2.0 * gamma + 4.0
    return None


def _offsets(N: int) -> np.ndarray:
    """Signed lattice offset stored at each slot of the padded axis (slot ``N`` is unused)."""
    d = np.arange(2 * N)
    return np.where(d < N, d, d - 2 * N)


def _padded_offsets(N: int):
    d = _offsets(N)
    dx, dy, dz = np.meshgrid(d, d, d, indexing="ij")
    unused = (np.abs(dx) == N) | (np.abs(dy) == N) | (np.abs(dz) == N)
    return (dx, dy, dz), unused


_D2 = {1: 16.0 / 12.0, 2: -1.0 / 12.0}  # fourth-order second difference, centre weight -30/12
_D1 = {1: 8.0 / 12.0, 2: -1.0 / 12.0}  # fourth-order first difference (odd)


def _stencil(k: int, l: int):
    """Integer offsets and weights of a fourth-order ``h^2 d_kl`` stencil."""
    out = []
    if k == l:
        out.append(((0, 0, 0), -30.0 / 12.0))
        for m, w in _D2.items():
            for sgn in (1, -1):
                e = [0, 0, 0]
                e[k] = sgn * m
                out.append((tuple(e), w))
        return out
    for mk, wk in _D1.items():
        for ml, wl in _D1.items():
            for sk in (1, -1):
                for sl in (1, -1):
                    e = [0, 0, 0]
                    e[k], e[l] = sk * mk, sl * ml
                    out.append((tuple(e), sk * sl * wk * wl))
    return out


def _add_to_table(table, offset, value):
    table[(Ellipsis, *offset)] += value  # negative offsets wrap onto the padded lattice


def matrix_kernel_table(grid: GridSpec, kind: KernelKind, rule: str = "zeta") -> np.ndarray:
    """Weighted kernel on the padded lattice, shape ``(6, 2N, 2N, 2N)``."""
    h, N = grid.h, grid.N
    (dx, dy, dz), unused = _padded_offsets(N)
    n = (dx, dy, dz)
    r2 = (dx * dx + dy * dy + dz * dz).astype(float)
    k = kernel_radial(kind, grid.gamma, h * h * r2) * grid.cell_volume
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(r2 > 0, 1.0 / r2, 0.0)
    table = np.empty((6, 2 * N, 2 * N, 2 * N))
    for c, (i, j) in enumerate(SYM_PAIRS):
        table[c] = k * ((1.0 if i == j else 0.0) - n[i] * n[j] * inv)
    table[:, unused] = 0.0
    p = _singular_power(kind, grid.gamma)
    if p is not None:
        w0 = singular_weight(p, h, "ball" if rule == "ball" else "zeta") * 2.0 / 3.0
        for c, (i, j) in enumerate(SYM_PAIRS):
            if i == j:
                table[c, 0, 0, 0] = w0
        if rule == "zeta":
            s3, A, B = fourth_moments(p)
            pref = -0.5 * h ** (3.0 + p)
            for c, (i, j) in enumerate(SYM_PAIRS):
                if i == j:
                    for k in range(3):
                        for off, w in _stencil(k, k):
                            _add_to_table(table[c], off, pref * (s3 - (A if k == i else B)) * w)
                else:
                    for off, w in _stencil(i, j):
                        _add_to_table(table[c], off, pref * (-2.0 * B) * w)
    return table


def scalar_kernel_table(grid: GridSpec, p: float, rule: str = "zeta") -> np.ndarray:
    """Weighted ``|z|^p`` on the padded lattice, shape ``(2N, 2N, 2N)``."""
    h, N = grid.h, grid.N
    (dx, dy, dz), unused = _padded_offsets(N)
    r2 = (dx * dx + dy * dy + dz * dz).astype(float)
    with np.errstate(divide="ignore"):
        table = np.where(r2 > 0, (h * h * r2) ** (0.5 * p), 0.0) * grid.cell_volume
    table[unused] = 0.0
    table[0, 0, 0] = singular_weight(p, h, "ball" if rule == "ball" else "zeta")
    if rule == "zeta":
        s3 = fourth_moments(p)[0]
        for k in range(3):
            for off, w in _stencil(k, k):
                _add_to_table(table, off, -0.5 * h ** (3.0 + p) * s3 * w)
    return table


def _rfft(x, N):
    return scipy.fft.rfftn(x, s=(2 * N,) * 3, axes=(-3, -2, -1), workers=thread_count())


def _irfft(X, N):
    out = scipy.fft.irfftn(X, s=(2 * N,) * 3, axes=(-3, -2, -1), workers=thread_count())
    return out[..., :N, :N, :N]


@lru_cache(maxsize=32)
def _matrix_kernel_hat(L, N, gamma, kind, rule):
    hat = _rfft(matrix_kernel_table(GridSpec(L, N, gamma), kind, rule), N)
    hat.setflags(write=False)
    return hat


@lru_cache(maxsize=32)
def _scalar_kernel_hat(L, N, gamma, p, rule):
    hat = _rfft(scalar_kernel_table(GridSpec(L, N, gamma), p, rule), N)
    hat.setflags(write=False)
    return hat


def convolve_matrix(u: np.ndarray, grid: GridSpec, kind: KernelKind = KernelKind.FULL, rule: str = "zeta") -> np.ndarray:
    """``sum_j K(v_i - v_j) u_j h^3`` for a scalar field ``u``; packed ``(6, N, N, N)``."""
    N = grid.N
    hat = _matrix_kernel_hat(grid.L, N, grid.gamma, kind, rule)
    return _irfft(hat * _rfft(u, N), N)


def convolve_matrix_vector(u: np.ndarray, grid: GridSpec, kind: KernelKind = KernelKind.FULL, rule: str = "zeta") -> np.ndarray:
    """``sum_j K(v_i - v_j) u_j h^3`` for a vector field ``u`` of shape ``(3, N, N, N)``."""
    N = grid.N
    hat = _matrix_kernel_hat(grid.L, N, grid.gamma, kind, rule)
    uh = _rfft(u, N)
    idx = symmat._FULL_INDEX
    prod = np.stack([sum(hat[idx[i, j]] * uh[j] for j in range(3)) for i in range(3)])
    return _irfft(prod, N)


def convolve_scalar(u: np.ndarray, grid: GridSpec, p: float, rule: str = "zeta") -> np.ndarray:
    """``sum_j |v_i - v_j|^p u_j h^3``."""
    N = grid.N
    hat = _scalar_kernel_hat(grid.L, N, grid.gamma, float(p), rule)
    return _irfft(hat * _rfft(u, N), N)


def _check_density(g, grid):
    g = np.asarray(g, dtype=float)
    if g.shape != grid.shape:
        raise ValueError(f"field shape {g.shape} does not match grid {grid.shape}")
    if grid.cell_volume * g.sum() < 0:
        raise ValueError("density has negative mass")
    return g


def coeff_a_bar(g: np.ndarray, grid: GridSpec, kind: KernelKind = KernelKind.FULL, rule: str = "zeta") -> np.ndarray:
    """Diffusion matrix ``a_bar = K * g`` at every node, packed ``(6, N, N, N)``."""
    return convolve_matrix(_check_density(g, grid), grid, kind, rule)


def coeff_c_bar(g: np.ndarray, grid: GridSpec, rule: str = "zeta") -> np.ndarray:
    """Reaction coefficient ``c_bar = -div div a_bar``.

    ``8 pi g`` for ``gamma = -3`` and ``2 (gamma + 3) |z|^gamma * g`` otherwise.
    """
    g = _check_density(g, grid)
    gamma = grid.gamma
    if gamma == -3.0:
        return 8.0 * np.pi * g
    return 2.0 * (gamma + 3.0) * convolve_scalar(g, grid, gamma, rule)


def coeff_a_bar_at(g: np.ndarray, grid: GridSpec, point, kind: KernelKind = KernelKind.FULL, rule: str = "zeta") -> np.ndarray:
    """Direct midpoint sum of ``K(point - w) g(w)`` at an arbitrary point, as a 3x3 matrix.

    If ``point`` coincides with a node the singular-cell weight is used there.
    At a cell corner (for instance the origin when ``N`` is even) the half-lattice
    zeta correction is applied with ``g(point)`` taken as the mean of the eight
    surrounding nodes; other points get the plain midpoint sum.
    """
    point = np.asarray(point, dtype=float).reshape(3, 1, 1, 1)
    z = point - grid.v
    r2 = np.einsum("i...,i...->...", z, z)
    k = kernel_radial(kind, grid.gamma, r2) * g * grid.cell_volume
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(r2 > 0, 1.0 / r2, 0.0)
    out = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            out[i, j] = np.sum(k * ((1.0 if i == j else 0.0) - z[i] * z[j] * inv))
    hit = r2 == 0.0
    p = _singular_power(kind, grid.gamma)
    if p is not None and hit.any():
        out += singular_weight(p, grid.h, "ball" if rule == "ball" else "zeta") * 2.0 / 3.0 * float(g[hit].sum()) * np.eye(3)
    elif p is not None and rule != "ball":
        corner = _corner_cells(point.ravel(), grid)
        if corner is not None:
            out += corner_weight(p, grid.h) * 2.0 / 3.0 * float(g[corner].mean()) * np.eye(3)
    return out


def _corner_cells(point, grid):
    """Index slices of the 2x2x2 nodes around ``point`` if it is an interior cell corner."""
    s = (point + grid.L) / grid.h
    k = np.round(s)
    if np.any(np.abs(s - k) > 1e-9) or np.any(k < 1) or np.any(k > grid.N - 1):
        return None
    return tuple(slice(int(i) - 1, int(i) + 1) for i in k)


# -- ellipticity measurements -------------------------------------------------


def coercivity_c0(f: np.ndarray, grid: GridSpec, rule: str = "zeta"):
    """``min_v lambda_min(a~ * f)(v) / <v>^gamma`` and the index of the minimising node."""
    a_cut = coeff_a_bar(f, grid, KernelKind.CUTOFF, rule)
    ratio = symmat.eigvalsh(a_cut)[0] / weight_field(grid, grid.gamma)
    k = int(np.argmin(ratio))
    return float(ratio.ravel()[k]), np.unravel_index(k, grid.shape)


def ellipticity_constants(a_bar: np.ndarray, grid: GridSpec) -> dict:
    """Measured ellipticity of ``a_bar``.

    ``lambda_hat = min lambda_min / <v>^gamma``, ``Lambda_hat = max lambda_max / <v>^(gamma+2)``,
    plus the radial Rayleigh quotient ``<a_bar v^, v^> / <v>^gamma`` (its max and median)
    and ``max lambda_max / <v>^gamma`` for comparison.
    """
    gamma = grid.gamma
    lam = symmat.eigvalsh(a_bar)
    w_g = weight_field(grid, gamma)
    w_g2 = weight_field(grid, gamma + 2.0)
    r = np.sqrt(grid.speed2)
    vhat = grid.v / r
    radial = symmat.quadratic_form(a_bar, vhat) / w_g
    return {
        "lambda_hat": float(np.min(lam[0] / w_g)),
        "Lambda_hat": float(np.max(lam[2] / w_g2)),
        "radial_max": float(np.max(radial)),
        "radial_median": float(np.median(radial)),
        "generic_max": float(np.max(lam[2] / w_g)),
        "lambda_max": float(np.max(lam[2])),
    }
