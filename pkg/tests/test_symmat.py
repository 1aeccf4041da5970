import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from landau_lab import symmat


def _pack_rows(M):
    """``(n, 3, 3) -> (6, n)``."""
    return np.stack([M[:, i, j] for i, j in ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))])


def test_pack_unpack_roundtrip():
    rng = np.random.default_rng(0)
    s = rng.normal(size=(6, 4, 5))
    np.testing.assert_array_equal(symmat.pack(symmat.unpack(s)), s)
    m = symmat.unpack(s)
    assert m.shape == (4, 5, 3, 3)
    np.testing.assert_array_equal(m, np.swapaxes(m, -1, -2))


def test_matvec_quadratic_contract_trace():
    rng = np.random.default_rng(1)
    s = rng.normal(size=(6, 7))
    x, y = rng.normal(size=(3, 7)), rng.normal(size=(3, 7))
    M = symmat.unpack(s)
    np.testing.assert_allclose(symmat.matvec(s, x), np.einsum("nij,jn->in", M, x), rtol=1e-13)
    np.testing.assert_allclose(symmat.quadratic_form(s, x), np.einsum("in,nij,jn->n", x, M, x), rtol=1e-12)
    np.testing.assert_allclose(symmat.quadratic_form(s, x, y), np.einsum("in,nij,jn->n", x, M, y), rtol=1e-12)
    t = rng.normal(size=(6, 7))
    T = symmat.unpack(t)
    np.testing.assert_allclose(symmat.contract(s, t), np.einsum("nij,nij->n", M, T), rtol=1e-12)
    np.testing.assert_allclose(symmat.trace(s), np.trace(M, axis1=1, axis2=2), rtol=1e-13)


@given(st.integers(0, 2**32 - 1))
def test_eigvalsh_matches_lapack(seed):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(50, 3, 3))
    M = M + np.transpose(M, (0, 2, 1))
    lam = symmat.eigvalsh(_pack_rows(M))
    np.testing.assert_allclose(lam.T, np.linalg.eigvalsh(M), atol=1e-12 * np.abs(M).max())


def test_eigvalsh_degenerate_cases():
    cases = [np.eye(3), np.zeros((3, 3)), np.diag([0.0, 1.0, 1.0]), np.diag([2.0, 2.0, -1.0])]
    M = np.stack(cases)
    np.testing.assert_allclose(symmat.eigvalsh(_pack_rows(M)).T, np.linalg.eigvalsh(M), atol=1e-12)


def test_eigh_vectors():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(20, 3, 3))
    M = A @ np.transpose(A, (0, 2, 1))
    lam, vec = symmat.eigh(_pack_rows(M))
    for n in range(20):
        for k in range(3):
            np.testing.assert_allclose(M[n] @ vec[n, :, k], lam[n, k] * vec[n, :, k], atol=1e-10)


@given(st.integers(0, 2**32 - 1), st.floats(1.0, 1e3))
def test_selling_reconstructs_and_is_nonnegative(seed, aniso):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    D = Q @ np.diag([1.0, aniso ** 0.5, aniso]) @ Q.T
    s = _pack_rows(D[None])
    w, e = symmat.selling_decomposition(s)
    assert np.all(w >= 0)
    assert e.dtype == np.int64
    R = sum(w[k, 0] * np.outer(e[k, :, 0], e[k, :, 0]) for k in range(6))
    np.testing.assert_allclose(R, D, atol=1e-11 * aniso)


def test_selling_identity_uses_unit_offsets():
    w, e = symmat.selling_decomposition(_pack_rows(np.eye(3)[None]))
    used = [tuple(e[k, :, 0]) for k in range(6) if w[k, 0] > 0]
    assert sorted(map(lambda t: tuple(abs(x) for x in t), used)) == [(0, 0, 1), (0, 1, 0), (1, 0, 0)]


def test_selling_rejects_indefinite():
    with pytest.raises(ArithmeticError):
        symmat.selling_decomposition(_pack_rows(np.diag([1.0, -1.0, 1.0])[None]), max_iter=50)
