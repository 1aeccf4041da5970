import json
import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from landau_lab.config import config_from_dict
from landau_lab.grid import integrate, make_grid, maxwellian

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("thorough", max_examples=300, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

_BASELINE_FILE = Path(__file__).parent / "baselines.json"
BASELINES = json.loads(_BASELINE_FILE.read_text()) if _BASELINE_FILE.exists() else {}

# -- acceptance bookkeeping ---------------------------------------------------

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, name): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    n, name = mark.args
    entry = _CRITERIA.setdefault(n, {"name": name, "ok": True, "ran": False})
    if rep.when == "call":
        entry["ran"] = True
    if rep.failed:
        entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        status = "PASS" if e["ok"] and e["ran"] else ("FAIL" if not e["ok"] else "NOT RUN")
        terminalreporter.write_line(f"C{n:<2} {e['name']}: {status}")


# -- shared helpers -----------------------------------------------------------


def random_density(grid, rng):
    """Smooth positive density of unit mass: a shifted Gaussian times a random cosine modulation."""
    mu = rng.uniform(0.3, 0.9)
    mean = rng.uniform(-1.0, 1.0, 3)
    f = maxwellian(grid, mu, mean)
    k = rng.integers(1, 3, 3)
    phase = rng.uniform(0.0, 2.0 * np.pi, 3)
    wave = np.prod(np.cos(np.pi * k[:, None, None, None] * grid.v / grid.L + phase[:, None, None, None]), axis=0)
    f = f * (1.0 + rng.uniform(0.0, 0.5) * wave)
    return f / integrate(f, grid)


def perturbed_maxwellian(grid, amplitude=0.2):
    m = maxwellian(grid)
    f = m * (1.0 + amplitude * np.cos(np.pi * grid.v[0] / grid.L))
    return f / integrate(f, grid)


def reference_config(N=24, gamma=-3.0, T=0.5, f0=True, amplitude=0.1, **extra):
    doc = {
        "grid": {"L": 6.0, "N": N, "gamma": gamma},
        "initial": {"g0": {"kind": "maxwellian", "mu": 0.5}},
        "solver": {"T": T},
    }
    if f0 is True:
        doc["initial"]["f0"] = {"kind": "perturbed", "mu": 0.5, "amplitude": amplitude}
    elif f0:
        doc["initial"]["f0"] = f0
    doc.update(extra)
    return config_from_dict(doc)


@pytest.fixture
def grid16():
    return make_grid(6.0, 16, -3.0)
