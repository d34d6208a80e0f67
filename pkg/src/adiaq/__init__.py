"""Adiabatic quantum computation on three-bit exact cover, with thermal and control noise."""

from ._version import __version__
from .ec3 import Clause, Ec3Instance, count_satisfying, generate_unique, violation_count, violation_table
from .evolution import EvolutionConfig, EvolutionResult, evolve, find_runtime, success_probability
from .experiments import SweepPlan, SweepResult, run
from .open_system import BathParams, evolve_master, gibbs_state, thermal_success
from .operators import HamiltonianSpec, Perturbation, apply, dense, envelope, random_directions
from .spectral import GapReport, eigensystem, ground_overlap, min_gap, spectrum_scan

__all__ = [
    "__version__", "BathParams", "Clause", "Ec3Instance", "EvolutionConfig", "EvolutionResult", "GapReport",
    "HamiltonianSpec", "Perturbation", "SweepPlan", "SweepResult", "apply", "count_satisfying", "dense",
    "eigensystem", "envelope", "evolve", "evolve_master", "find_runtime", "generate_unique", "gibbs_state",
    "ground_overlap", "min_gap", "random_directions", "run", "spectrum_scan", "success_probability",
    "thermal_success", "violation_count", "violation_table",
]
