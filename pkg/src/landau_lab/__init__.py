"""Deterministic simulator for the space-homogeneous Landau equation with soft potentials."""
from .errors import ChecksumError, ConfigError, GridMismatchError, LandauLabError, NumericalFailure, SnapshotError
from .grid import DensityStats, GridSpec, conserved_triple, make_grid, maxwellian
from .kernels import BACKEND_NAME
from .coefficients import KernelKind, coeff_a_bar, coeff_c_bar, coercivity_c0, ellipticity_constants
from .functionals import (
    bad_term,
    entropy,
    entropy_dissipation,
    good_term,
    pinsker_gap,
    relative_entropy,
)
from .solver import SolverConfig, evolve, rhs
from .config import ExperimentConfig, parse_config

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME",
    "ChecksumError",
    "ConfigError",
    "DensityStats",
    "ExperimentConfig",
    "GridMismatchError",
    "GridSpec",
    "KernelKind",
    "LandauLabError",
    "NumericalFailure",
    "SnapshotError",
    "SolverConfig",
    "bad_term",
    "coeff_a_bar",
    "coeff_c_bar",
    "coercivity_c0",
    "conserved_triple",
    "ellipticity_constants",
    "entropy",
    "entropy_dissipation",
    "evolve",
    "good_term",
    "make_grid",
    "maxwellian",
    "parse_config",
    "pinsker_gap",
    "relative_entropy",
    "rhs",
]
