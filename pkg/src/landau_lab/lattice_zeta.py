"""Epstein zeta functions of the simple cubic lattice and singular-cell weights.

For a kernel ``K`` homogeneous of degree ``p`` and a smooth, rapidly decaying
``phi``, the lattice sum with the singular node removed expands as

    h^3 sum' K(h n) phi(h n) = int K phi
        + h^(3+p) phi(0) Z[K] + h^(5+p) / 2 sum_kl d_kl phi(0) Z[K n_k n_l] + O(h^(7+p))

where ``Z[.]`` denotes the analytically continued lattice sum over
``n != 0``. Subtracting the first two correction terms (a weight on the
singular node plus a Hessian stencil on its neighbours) gives an
``O(h^(7+p))`` quadrature.
"""
from __future__ import annotations

from functools import lru_cache

import mpmath as mp
import numpy as np


@lru_cache(maxsize=None)
def _shells(radius: int):
    r = np.arange(-radius, radius + 1)
    n2 = (r[:, None, None] ** 2 + r[None, :, None] ** 2 + r[None, None, :] ** 2).ravel()
    vals, counts = np.unique(n2[n2 > 0], return_counts=True)
    return tuple(zip(vals.tolist(), counts.tolist()))


@lru_cache(maxsize=None)
def _quartic_shells(radius: int):
    r = np.arange(-radius, radius + 1)
    x, y, z = np.meshgrid(r, r, r, indexing="ij")
    n2 = (x * x + y * y + z * z).ravel()
    # harmonic quartic with cubic symmetry, scaled by 5 to stay integral
    p4 = (5 * (x**4 + y**4 + z**4) - 3 * (x * x + y * y + z * z) ** 2).ravel()
    out = {}
    for a, b in zip(n2.tolist(), p4.tolist()):
        if a:
            out[a] = out.get(a, 0) + b
    return tuple((a, b) for a, b in sorted(out.items()) if b)


@lru_cache(maxsize=None)
def quartic_zeta(s: float) -> float:
    """``sum' P4(n) |n|^{-s}`` with ``P4 = x^4 + y^4 + z^4 - 3/5 |n|^4``; entire in ``s``."""
    with mp.workdps(30):
        acc = mp.mpf(0)
        h = mp.mpf(s) / 2
        for n2, w in _quartic_shells(6):
            x = mp.pi * n2
            acc += w * (mp.gammainc(h, x) * x ** (-h) + mp.gammainc(mp.mpf(11) / 2 - h, x) * x ** (h - mp.mpf(11) / 2))
        val = mp.pi**h * mp.rgamma(h) * acc / 5
    return float(val)


@lru_cache(maxsize=None)
def lattice_zeta(s: float) -> float:
    """``Z(s) = sum' |n|^{-s}`` over ``Z^3 \\ {0}``, continued to all ``s != 3``.

    Theta-function splitting at ``t = 1``; the lattice sums converge like
    ``exp(-pi |n|^2)`` so six shells are far below double precision.
    """
    s = float(s)
    if s == 3.0:
        raise ValueError("Z(s) has a pole at s = 3")
    if s == 0.0:
        return -1.0
    with mp.workdps(30):
        acc = mp.mpf(0)
        for n2, count in _shells(6):
            x = mp.pi * n2
            acc += count * (
                mp.gammainc(s / 2, x) * x ** (-s / 2) + mp.gammainc((3 - s) / 2, x) * x ** ((s - 3) / 2)
            )
        val = mp.pi ** (s / 2) * mp.rgamma(s / 2) * (acc + 2 / (mp.mpf(s) - 3) - 2 / mp.mpf(s))
    return float(val)


@lru_cache(maxsize=None)
def _half_shells(radius: int):
    # 4 |n + 1/2|^2 = sum (2 m + 1)^2 is an integer
    r = 2 * np.arange(-radius, radius) + 1
    n4 = (r[:, None, None] ** 2 + r[None, :, None] ** 2 + r[None, None, :] ** 2).ravel()
    vals, counts = np.unique(n4, return_counts=True)
    return tuple(zip(vals.tolist(), counts.tolist()))


@lru_cache(maxsize=None)
def _signed_shells(radius: int):
    r = np.arange(-radius, radius + 1)
    x, y, z = np.meshgrid(r, r, r, indexing="ij")
    n2 = (x * x + y * y + z * z).ravel()
    sign = (1 - 2 * ((x + y + z) % 2)).ravel()
    out = {}
    for a, b in zip(n2.tolist(), sign.tolist()):
        if a:
            out[a] = out.get(a, 0) + b
    return tuple((a, b) for a, b in sorted(out.items()) if b)


@lru_cache(maxsize=None)
def half_lattice_zeta(s: float) -> float:
    """``sum |n + (1/2, 1/2, 1/2)|^{-s}`` over ``Z^3``, continued to all ``s != 3``.

    Same splitting as :func:`lattice_zeta`; the dual sum picks up the phase
    ``(-1)^(k1 + k2 + k3)`` and there is no excluded origin.
    """
    s = float(s)
    if s == 3.0:
        raise ValueError("the sum has a pole at s = 3")
    with mp.workdps(30):
        acc = mp.mpf(0)
        for n4, count in _half_shells(6):
            x = mp.pi * mp.mpf(n4) / 4
            acc += count * mp.gammainc(s / 2, x) * x ** (-s / 2)
        for n2, sign in _signed_shells(6):
            x = mp.pi * n2
            acc += sign * mp.gammainc((3 - s) / 2, x) * x ** ((s - 3) / 2)
        val = mp.pi ** (s / 2) * mp.rgamma(s / 2) * (acc + 2 / (mp.mpf(s) - 3))
    return float(val)


def corner_weight(p: float, h: float) -> float:
    """Correction for a midpoint sum of ``|z|^p phi`` evaluated at a cell corner.

    ``int |z|^p phi = h^3 sum |z_j|^p phi_j + corner_weight * phi(corner) + O(h^(5+p))``.
    """
    if p <= -3:
        raise ValueError(f"|z|^{p} is not locally integrable in 3D")
    return -half_lattice_zeta(-p) * h ** (3.0 + p)


def ball_radius(h: float) -> float:
    """Radius of the ball with volume ``h^3``."""
    return h * (3.0 / (4.0 * np.pi)) ** (1.0 / 3.0)


def singular_weight(p: float, h: float, rule: str = "zeta") -> float:
    """Quadrature weight of the ``z = 0`` cell for the kernel ``|z|^p``.

    ``rule="zeta"``: lattice-zeta correction (the caller adds the Hessian
    term from :func:`fourth_moments` for the full ``O(h^(7+p))`` rule).
    ``rule="ball"``: ``h^3`` times the mean of ``|z|^p`` over the ball of
    volume ``h^3``, error ``O(h^(3+p))``.
    """
    if p <= -3:
        raise ValueError(f"|z|^{p} is not locally integrable in 3D")
    if rule == "zeta":
        return -lattice_zeta(-p) * h ** (3.0 + p)
    if rule == "ball":
        return h**3 * 3.0 * ball_radius(h) ** p / (p + 3.0)
    raise ValueError(f"unknown singular rule {rule!r}")


def fourth_moments(p: float):
    """Continued sums ``S = sum' |n|^(p+2) / 3``, ``A = sum' |n|^(p-2) x^4``, ``B = sum' |n|^(p-2) x^2 y^2``."""
    zs = lattice_zeta(-p - 2.0)
    A = (quartic_zeta(2.0 - p) + 0.6 * zs) / 3.0
    B = (zs - 3.0 * A) / 6.0
    return zs / 3.0, A, B

