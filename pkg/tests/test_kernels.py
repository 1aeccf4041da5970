import os
import subprocess
import sys

import numpy as np
import pytest

from landau_lab import kernels

compiled = pytest.importorskip("landau_lab.kernels._pairsum")


@pytest.fixture(scope="module")
def pairs():
    rng = np.random.default_rng(3)
    nodes = np.unravel_index(rng.choice(6**3, 40, replace=False), (6, 6, 6))
    idx = np.ascontiguousarray(np.array(nodes).T, dtype=np.int64)
    table = rng.random(3 * 25 + 1)
    table[0] = 0.0
    vec = lambda: rng.standard_normal((40, 3))  # noqa: E731
    sca = lambda: rng.standard_normal(40)  # noqa: E731
    return {
        "quad_pairs": (idx, sca(), vec(), table),
        "bad_pairs": (idx, vec(), vec(), sca(), table),
        "j_pairs": (idx, sca(), np.abs(sca()), vec(), table),
        "cross_pairs": (idx, vec(), table),
    }


def _proj(n):
    return np.eye(3) - np.outer(n, n) / (n @ n)


def test_quad_pairs_matches_double_loop(pairs):
    idx, s, P, table = pairs["quad_pairs"]
    want = np.zeros(len(s))
    for i in range(len(s)):
        for j in range(len(s)):
            n = (idx[j] - idx[i]).astype(float)
            if not n.any():
                continue
            Y = _proj(n) @ (s[j] * P[i] - s[i] * P[j])
            want[i] += table[int(n @ n)] * (Y @ Y)
    for name in ("python", "compiled"):
        np.testing.assert_allclose(kernels.call("quad_pairs", *pairs["quad_pairs"], backend_name=name), want,
                                   rtol=1e-12, atol=0)


def test_cross_pairs_matches_double_loop(pairs):
    idx, U, table = pairs["cross_pairs"]
    want = np.zeros(len(U))
    for i in range(len(U)):
        for j in range(len(U)):
            n = (idx[j] - idx[i]).astype(float)
            if n.any():
                want[i] += table[int(n @ n)] * U[i] @ _proj(n) @ U[j]
    got = kernels.call("cross_pairs", *pairs["cross_pairs"], backend_name="python")
    np.testing.assert_allclose(got, want, rtol=1e-11, atol=1e-12)


@pytest.mark.parametrize("fn", ["quad_pairs", "bad_pairs", "j_pairs", "cross_pairs"])
def test_backends_agree(pairs, fn):
    py = kernels.call(fn, *pairs[fn], backend_name="python")
    cc = kernels.call(fn, *pairs[fn], backend_name="compiled")
    assert py.shape == cc.shape
    np.testing.assert_allclose(cc, py, rtol=1e-12, atol=1e-12 * np.max(np.abs(py)))


@pytest.mark.parametrize("fn", ["quad_pairs", "bad_pairs", "j_pairs", "cross_pairs"])
def test_compiled_result_ignores_thread_count(pairs, fn):
    one = getattr(compiled, fn)(*pairs[fn], 1)
    four = getattr(compiled, fn)(*pairs[fn], 4)
    assert one.tobytes() == four.tobytes()


def test_get_backend():
    assert kernels.get_backend("python").__name__.endswith("_pairsum_py")
    assert kernels.get_backend("compiled") is compiled
    assert kernels.get_backend() is kernels.backend
    with pytest.raises(ValueError, match="unknown backend"):
        kernels.get_backend("fortran")


def test_thread_count(monkeypatch):
    monkeypatch.setenv("LANDAU_LAB_THREADS", "1")
    assert kernels.thread_count() == 1
    monkeypatch.setenv("LANDAU_LAB_THREADS", "100000")
    assert kernels.thread_count() == (os.cpu_count() or 1)
    monkeypatch.setenv("LANDAU_LAB_THREADS", "many")
    assert kernels.thread_count() == (os.cpu_count() or 1)


def test_force_python_env():
    code = "from landau_lab import kernels; print(kernels.BACKEND_NAME)"
    env = dict(os.environ, LANDAU_LAB_FORCE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    env.pop("LANDAU_LAB_FORCE_PYTHON")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "compiled"
