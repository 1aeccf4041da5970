"""Per-node symmetric 3x3 matrices stored as six upper-triangle components."""
from __future__ import annotations

import numpy as np

from .grid import SYM_PAIRS

_FULL_INDEX = np.array([[0, 1, 2], [1, 3, 4], [2, 4, 5]])


def pack(m: np.ndarray) -> np.ndarray:
    """``(..., 3, 3)`` -> ``(6, ...)``."""
    return np.stack([m[..., i, j] for i, j in SYM_PAIRS])


def unpack(s: np.ndarray) -> np.ndarray:
    """``(6, ...)`` -> ``(..., 3, 3)``."""
    return np.moveaxis(s[_FULL_INDEX], (0, 1), (-2, -1))


def matvec(s: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Apply a packed field ``(6, ...)`` to a vector field ``(3, ...)``."""
    return np.stack([sum(s[_FULL_INDEX[i, j]] * x[j] for j in range(3)) for i in range(3)])


def quadratic_form(s: np.ndarray, x: np.ndarray, y: np.ndarray | None = None) -> np.ndarray:
    """``x^T S y`` per node (``y`` defaults to ``x``)."""
    if y is None:
        y = x
    return np.einsum("i...,i...->...", x, matvec(s, y))


def contract(s: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Frobenius product ``S : T`` of two packed fields."""
    w = np.array([1.0, 2.0, 2.0, 1.0, 2.0, 1.0]).reshape((6,) + (1,) * (s.ndim - 1))
    return np.sum(w * s * t, axis=0)


def trace(s: np.ndarray) -> np.ndarray:
    return s[0] + s[3] + s[5]


def eigvalsh(s: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of every packed matrix, shape ``(3, ...)``.

    Closed-form trigonometric solution of the characteristic cubic. Nodes
    where the cubic is close to a double root (where the arccos loses
    accuracy) are recomputed with LAPACK's tridiagonal solver.
    """
    a11, a12, a13, a22, a23, a33 = s
    q = (a11 + a22 + a33) / 3.0
    p1 = a12**2 + a13**2 + a23**2
    b11, b22, b33 = a11 - q, a22 - q, a33 - q
    p2 = b11**2 + b22**2 + b33**2 + 2.0 * p1
    p = np.sqrt(p2 / 6.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(p > 0, 1.0 / p, 0.0)
        c11, c12, c13, c22, c23, c33 = b11 * inv, a12 * inv, a13 * inv, b22 * inv, a23 * inv, b33 * inv
        det = c11 * (c22 * c33 - c23 * c23) - c12 * (c12 * c33 - c23 * c13) + c13 * (c12 * c23 - c22 * c13)
        r = np.clip(0.5 * det, -1.0, 1.0)
        phi = np.arccos(r) / 3.0
    e_max = q + 2.0 * p * np.cos(phi)
    e_min = q + 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0)
    e_mid = 3.0 * q - e_max - e_min
    out = np.stack([e_min, e_mid, e_max])

    scale = np.maximum(np.abs(q), p)
    bad = (np.abs(r) > 1.0 - 1e-6) & (p > 1e-12 * scale)
    if np.any(bad):
        out[:, bad] = np.moveaxis(np.linalg.eigvalsh(unpack(s[:, bad])), -1, 0)
    return out


def eigh(s: np.ndarray):
    """Eigen-decomposition of every packed matrix (LAPACK); eigenvectors in the last axis."""
    return np.linalg.eigh(unpack(s))


_SUPERBASE_PAIRS = ((0, 1, 2, 3), (0, 2, 1, 3), (0, 3, 1, 2), (1, 2, 0, 3), (1, 3, 0, 2), (2, 3, 0, 1))


def selling_decomposition(s: np.ndarray, max_iter: int = 500):
    """Selling's decomposition ``S = sum_k w_k e_k e_k^T`` with ``w_k >= 0`` and integer ``e_k``.

    Works per node on a packed positive definite field ``(6, ...)``. A superbase
    ``b_0 + b_1 + b_2 + b_3 = 0`` of Z^3 is flipped until it is obtuse for ``S``
    (all ``b_i^T S b_j <= 0``); then ``w_ij = -b_i^T S b_j`` and ``e_ij = b_k x b_l``
    for the complementary pair. Returns ``(weights (6, ...), offsets (6, 3, ...))``.
    """
    shape = s.shape[1:]
    D = unpack(s).reshape(-1, 3, 3)
    n = D.shape[0]
    b = np.zeros((n, 4, 3), dtype=np.int64)
    b[:, 0] = -1
    b[:, 1:] = np.eye(3, dtype=np.int64)
    tol = 1e-14 * np.abs(np.trace(D, axis1=1, axis2=2))
    active = np.arange(n)
    for _ in range(max_iter):
        bb = b[active].astype(float)
        Db = np.einsum("nij,nkj->nki", D[active], bb)
        moved = np.zeros(len(active), dtype=bool)
        for i, j, k, l in _SUPERBASE_PAIRS:
            p = np.einsum("nk,nk->n", bb[:, i], Db[:, j])
            hit = (p > tol[active]) & ~moved
            if hit.any():
                rows = active[hit]
                bi = b[rows, i].copy()
                b[rows, i] = -bi
                b[rows, k] += bi
                b[rows, l] += bi
                moved |= hit
        if not moved.any():
            break
        active = active[moved]
    else:
        raise ArithmeticError("Selling reduction did not terminate; matrix not positive definite?")
    Db = np.einsum("nij,nkj->nki", D, b.astype(float))
    weights = np.empty((6, n))
    offsets = np.empty((6, 3, n), dtype=np.int64)
    for m, (i, j, k, l) in enumerate(_SUPERBASE_PAIRS):
        weights[m] = np.maximum(-np.einsum("nk,nk->n", b[:, i], Db[:, j]), 0.0)
        offsets[m] = np.cross(b[:, k], b[:, l]).T
    return weights.reshape((6,) + shape), offsets.reshape((6, 3) + shape)
