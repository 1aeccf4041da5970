"""Reference numpy implementation of the pair sums, processed in row blocks.

Every function returns the per-row partial sums (one entry per outer node);
callers reduce them with ``numpy.sum`` so the total does not depend on how
rows were scheduled. ``table[r2]`` is the kernel prefactor (quadrature
weights included) at integer squared offset ``r2``; ``table[0]`` must be 0.
All kernels are projections ``Pi(n)`` applied between two vectors.
"""
import numpy as np

_BLOCK = 64


def _blocks(n):
    for start in range(0, n, _BLOCK):
        yield slice(start, min(n, start + _BLOCK))


def _geometry(idx, rows, table):
    n = idx[None, :, :] - idx[rows, None, :]
    r2 = np.einsum("abk,abk->ab", n, n)
    t = table[r2]
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(r2 > 0, 1.0 / r2, 0.0)
    return n.astype(float), t, inv


def _proj(t, inv, n, a, b):
    """``t (a.b - (a.n)(b.n)/|n|^2)`` with vectors in the last axis."""
    ab = np.einsum("...k,...k->...", a, b)
    an = np.einsum("...k,...k->...", a, n)
    bn = np.einsum("...k,...k->...", b, n)
    return t * (ab - an * bn * inv)


def _proj_sq(t, inv, n, a):
    """``t |Pi a|^2``, squared after projecting so it is never negative."""
    an = np.einsum("...k,...k->...", a, n) * inv
    pa = a - an[..., None] * n
    return t * np.einsum("...k,...k->...", pa, pa)


def quad_pairs(idx, s, P, table):
    """Rows of ``sum_j t |Pi Y|^2`` with ``Y = s_j P_i - s_i P_j``."""
    out = np.empty(len(s))
    for rows in _blocks(len(s)):
        n, t, inv = _geometry(idx, rows, table)
        Y = s[None, :, None] * P[rows, None, :] - s[rows, None, None] * P[None, :, :]
        out[rows] = _proj_sq(t, inv, n, Y).sum(axis=1)
    return out


def bad_pairs(idx, U, q, d, table):
    """Rows of ``sum_j t U_i . Pi (q_i - q_j) d_j``."""
    out = np.empty(len(d))
    for rows in _blocks(len(d)):
        n, t, inv = _geometry(idx, rows, table)
        B = (q[rows, None, :] - q[None, :, :]) * d[None, :, None]
        A = np.broadcast_to(U[rows, None, :], B.shape)
        out[rows] = _proj(t, inv, n, A, B).sum(axis=1)
    return out


def j_pairs(idx, W, w, q, table):
    """Rows of ``W_i sum_j t w_j |Pi (q_i - q_j)|^2``."""
    out = np.empty(len(W))
    for rows in _blocks(len(W)):
        n, t, inv = _geometry(idx, rows, table)
        D = q[rows, None, :] - q[None, :, :]
        out[rows] = W[rows] * (_proj_sq(t, inv, n, D) * w[None, :]).sum(axis=1)
    return out


def cross_pairs(idx, U, table):
    """Rows of ``sum_j t U_i . Pi U_j``."""
    out = np.empty(len(U))
    for rows in _blocks(len(U)):
        n, t, inv = _geometry(idx, rows, table)
        A = np.broadcast_to(U[rows, None, :], n.shape)
        B = np.broadcast_to(U[None, :, :], n.shape)
        out[rows] = _proj(t, inv, n, A, B).sum(axis=1)
    return out
