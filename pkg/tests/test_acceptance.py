"""Acceptance suite: one or more tests per criterion, summarised at the end of the run.

Run alone with ``pytest tests/test_acceptance.py -v``; the terminal summary
prints one PASS/FAIL line per criterion.
"""
import math
from dataclasses import replace

import numpy as np
import pytest

import oracles
from conftest import BASELINES, perturbed_maxwellian, random_density, reference_config
from landau_lab import cli, functionals as fn, harness
from landau_lab.coefficients import (
    KernelKind,
    coeff_a_bar,
    coeff_c_bar,
    coercivity_c0,
    ellipticity_constants,
)
from landau_lab.grid import make_grid, maxwellian
from landau_lab.solver import evolve, rhs

ORACLE = BASELINES["oracle"]
REGRESSION = BASELINES["regression"]


def _rel_err(a, b):
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


def _skewed_density(grid):
    """Maxwellian without the grid symmetries, so symmetric cancellation cannot hide errors."""
    f = maxwellian(grid, 0.45, (0.4, -0.3, 0.2))
    return f * (1.0 + 0.1 * np.cos(np.pi * grid.v[0] / grid.L) + 0.05 * np.sin(np.pi * grid.v[2] / grid.L))


# -- C1 -----------------------------------------------------------------------


@pytest.mark.criterion(1, "oracle equivalence")
@pytest.mark.parametrize("gamma", [-3.0, -2.5, -2.0])
@pytest.mark.parametrize("kind", [KernelKind.FULL, KernelKind.CUTOFF], ids=lambda k: k.value)
def test_c1_a_bar_matches_brute_force(gamma, kind):
    grid = make_grid(6.0, 12, gamma)
    g = _skewed_density(grid)
    # analytic kernel at every pair, centre weight only
    assert _rel_err(coeff_a_bar(g, grid, kind, rule="zeta0"), oracles.brute_a_bar(g, grid, kind)) <= 1e-10
    # default rule: the FFT product against the explicit lattice convolution of the same table
    assert _rel_err(coeff_a_bar(g, grid, kind), oracles.direct_a_bar(g, grid, kind, "zeta")) <= 1e-10


@pytest.mark.criterion(1, "oracle equivalence")
@pytest.mark.parametrize("gamma", [-3.0, -2.5, -2.0])
def test_c1_c_bar_matches_brute_force(gamma):
    grid = make_grid(6.0, 12, gamma)
    g = _skewed_density(grid)
    if gamma == -3.0:
        np.testing.assert_array_equal(coeff_c_bar(g, grid), 8.0 * np.pi * g)
        return
    assert _rel_err(coeff_c_bar(g, grid, rule="zeta0"), oracles.brute_c_bar(g, grid)) <= 1e-10
    assert _rel_err(coeff_c_bar(g, grid), oracles.direct_c_bar(g, grid, "zeta")) <= 1e-10


# -- C2 -----------------------------------------------------------------------


@pytest.mark.criterion(2, "functional inequalities")
def test_c2_functional_inequalities_on_random_pairs():
    grid = make_grid(6.0, 16, -3.0)
    rng = np.random.default_rng(20240601)
    failures = []
    for k in range(100):
        f, g = random_density(grid, rng), random_density(grid, rng)
        checks = {
            "pinsker_gap": fn.pinsker_gap(f, g, grid) >= -1e-12,
            "relative_entropy": fn.relative_entropy(f, g, grid) >= 0.0,
            "good_term": fn.good_term(f, g, grid, "pairs") >= 0.0,
            "dissipation": fn.entropy_dissipation(f, grid, "pairs") >= 0.0,
            "good_term(f,f)": abs(fn.good_term(f, f, grid, "pairs")) <= 1e-12,
            "bad_term(g,g)": abs(fn.bad_term(g, g, grid, "pairs")) <= 1e-12,
        }
        failures += [(k, name) for name, ok in checks.items() if not ok]
    assert not failures


# -- C3 -----------------------------------------------------------------------


@pytest.mark.criterion(3, "equilibrium annihilation")
def test_c3_dissipation_vanishes_at_equilibrium():
    grid = make_grid(6.0, 16, -3.0)
    m = maxwellian(grid)
    assert fn.entropy_dissipation(m, grid, "pairs") <= 1e-6 * fn.entropy_dissipation(perturbed_maxwellian(grid), grid, "pairs")


@pytest.mark.criterion(3, "equilibrium annihilation")
@pytest.mark.parametrize("gamma", [-3.0, -2.5])
def test_c3_rhs_residual_order(gamma):
    Ns = np.array([12, 16, 24, 32])
    res = []
    for N in Ns:
        grid = make_grid(6.0, int(N), gamma)
        res.append(float(np.max(np.abs(rhs(maxwellian(grid), grid)))))
    order = -np.polyfit(np.log(Ns), np.log(res), 1)[0]
    assert order >= 1.7, (res, order)


# -- C4 -----------------------------------------------------------------------


@pytest.mark.criterion(4, "conservation and H-theorem")
@pytest.mark.parametrize("gamma", [-3.0, -2.5])
@pytest.mark.parametrize("amplitude", [0.0, 0.1])
def test_c4_conservation_and_entropy(gamma, amplitude):
    cfg = reference_config(N=24, gamma=gamma, f0=False)
    spec = replace(cfg.g0, kind="perturbed", amplitude=amplitude)
    g0 = harness.build_density(spec, cfg.grid)
    solver = replace(cfg.solver, entropy_check=False)
    traj = evolve(g0, cfg.grid, solver)
    assert traj.reports
    assert max(float(np.max(np.abs(r.post_drift))) for r in traj.reports) <= 1e-12
    assert max(r.entropy_after - r.entropy_before for r in traj.reports) <= 1e-8


# -- C5 -----------------------------------------------------------------------


@pytest.mark.criterion(5, "ellipticity")
@pytest.mark.parametrize("gamma", [-3.0, -2.5])
def test_c5_ellipticity_constants(gamma):
    grid = make_grid(6.0, 24, gamma)
    m = maxwellian(grid)
    el = ellipticity_constants(coeff_a_bar(m, grid), grid)
    assert el["lambda_hat"] > 0
    assert math.isfinite(el["Lambda_hat"])
    assert el["radial_max"] <= 10.0 * el["radial_median"]
    assert el["radial_max"] < el["generic_max"]
    c0, _ = coercivity_c0(m, grid)
    want = ORACLE[f"c0_hat_maxwellian_N24_gamma{gamma}"]
    assert abs(c0 - want) <= 1e-3 * abs(want)


# -- C6 -----------------------------------------------------------------------


@pytest.mark.criterion(6, "weak-strong")
def test_c6_identical_data():
    rep = harness.run_weak_strong(reference_config(f0={"kind": "maxwellian", "mu": 0.5}))
    assert max(rep.rel_entropy) <= 1e-10
    assert rep.passed


@pytest.mark.criterion(6, "weak-strong")
def test_c6_bump_envelope():
    cfg = reference_config(tolerances={"gronwall_calibration": REGRESSION["gronwall_calibration"]})
    rep = harness.run_weak_strong(cfg)
    H = rep.rel_entropy
    assert all(b <= a for a, b in zip(H[1:], H[2:]))
    assert math.isfinite(rep.C_star)
    assert all(rep.sample_pass)
    assert H[0] == pytest.approx(REGRESSION["weak_strong_H0"], rel=1e-8)
    assert rep.terminal_ratio == pytest.approx(REGRESSION["weak_strong_terminal_ratio"], rel=1e-6)


@pytest.mark.criterion(6, "weak-strong")
def test_c6_half_bump_scales_quadratically():
    grid = make_grid(6.0, 24, -3.0)
    H = []
    for amp in (0.1, 0.05):
        cfg = reference_config(amplitude=amp)
        f0 = harness.build_density(cfg.f0, grid)
        g0 = harness.build_density(cfg.g0, grid)
        H.append(fn.relative_entropy(f0, g0, grid))
    assert 4.0 * 0.7 <= H[0] / H[1] <= 4.0 * 1.3


# -- C7 -----------------------------------------------------------------------


@pytest.mark.criterion(7, "entropy-evolution identity")
def test_c7_identity_residual_refines():
    cfg = reference_config(N=16, T=0.1, output={"cadence": 9})
    rep = harness.entropy_identity_refinement(cfg)
    assert all(rep.coarse["direction_ok"]) and all(rep.fine["direction_ok"])
    # halving h and dt must at least roughly halve the residual (2 x 0.7)
    assert rep.ratio >= 1.4, rep.ratio
    assert rep.coarse_max_residual == pytest.approx(REGRESSION["identity_coarse_max_residual"], rel=1e-4)


# -- C8 -----------------------------------------------------------------------


@pytest.mark.criterion(8, "Maxwellian propagation")
@pytest.mark.parametrize("gamma", [-3.0, -2.5])
@pytest.mark.parametrize("amplitude", [0.0, 0.1])
def test_c8_corridor(gamma, amplitude):
    cfg = reference_config(gamma=gamma, f0=False)
    cfg = replace(cfg, g0=replace(cfg.g0, kind="perturbed", amplitude=amplitude))
    rep = harness.run_maxwellian_propagation(cfg)
    assert rep.radius == pytest.approx(0.8 * cfg.grid.L)
    assert rep.corridor == (0.25, 4.0)
    assert rep.passed, (min(rep.lo_ratio), max(rep.hi_ratio))


# -- C9 -----------------------------------------------------------------------


@pytest.mark.criterion(9, "maximum principle")
@pytest.mark.parametrize("gamma", [-3.0, -2.5])
@pytest.mark.parametrize("amplitude", [0.0, 0.1])
def test_c9_sub_and_supersolutions(gamma, amplitude):
    cfg = reference_config(gamma=gamma, f0=False)
    cfg = replace(cfg, g0=replace(cfg.g0, kind="perturbed", amplitude=amplitude))
    rep = harness.run_maximum_principle(cfg)
    for value in (rep.max_sub, rep.max_sup, rep.barrier_sub, rep.barrier_sup):
        assert value <= 1e-10
    assert rep.control_min_max >= 0.0


# -- C10 ----------------------------------------------------------------------


@pytest.mark.criterion(10, "interpolation suite")
def test_c10_single_constant():
    rep = harness.run_interpolation_suite()
    assert rep.C_min <= 10.0
    assert rep.passed
    assert rep.C_min == pytest.approx(REGRESSION["interpolation_C_min"], rel=1e-9)


# -- C11 ----------------------------------------------------------------------


def _tree_bytes(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.mark.criterion(11, "determinism")
def test_c11_simulate_byte_identical(tmp_path):
    cfg = reference_config(N=16, T=0.1, output={"cadence": 5, "snapshot_times": [0.05]})
    outs = []
    for name in ("a", "b"):
        d = cli.simulate(replace(cfg, output=replace(cfg.output, dir=None)), tmp_path / name)
        files = _tree_bytes(d)
        outs.append({k: v for k, v in files.items() if k == "timeseries.csv" or k.startswith("snapshots/")})
    assert outs[0] == outs[1]
    assert "timeseries.csv" in outs[0]
    assert sum(k.endswith(".raw") for k in outs[0]) == 4  # f and g at t = 0.05 and T


@pytest.mark.criterion(11, "determinism")
def test_c11_experiment_reports_byte_identical(tmp_path):
    cfg = reference_config(N=16, T=0.1, output={"cadence": 5})
    reports = []
    for name in ("a", "b"):
        cli.run_experiments(cfg, tmp_path / name, ["weak_strong"])
        reports.append((tmp_path / name / "weak_strong.json").read_bytes())
    assert reports[0] == reports[1]
