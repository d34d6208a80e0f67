"""Estimator-style wrappers and input validation.

The functional modules stay the primary interface; these classes give the
usual ``fit`` / ``predict`` / ``transform`` / ``get_params`` surface for use
in scripts that batch over many instances. ``X`` is always a sequence of
instances (or a single one); each item may be an :class:`Ec3Instance`, a
path to an instance file, or the file's text.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .ec3 import Ec3Instance, InstanceError
from .evolution import NORM_ABORT, EvolutionConfig, evolve, find_runtime, success_probability
from .open_system import MASTER_MAX_BITS, BathParams, evolve_master
from .operators import KINDS, HamiltonianSpec, Perturbation
from .spectral import min_gap


def _one_instance(item) -> Ec3Instance:
    if isinstance(item, Ec3Instance):
        inst = item
    elif isinstance(item, (str, os.PathLike)):
        text = str(item)
        inst = Ec3Instance.from_text(text) if "\n" in text else Ec3Instance.load(Path(text))
    else:
        raise TypeError(f"cannot read an EC3 instance from {type(item).__name__}")
    if inst.satisfying_assignment is None:
        raise InstanceError("instance has no recorded satisfying assignment")
    return inst


def check_instances(X) -> list[Ec3Instance]:
    """Normalise ``X`` to a nonempty list of instances with known solutions."""
    if isinstance(X, (Ec3Instance, str, os.PathLike)):
        X = [X]
    items = [_one_instance(x) for x in X]
    if not items:
        raise ValueError("no instances given")
    return items


def check_state(psi, n: int | None = None, tol: float = NORM_ABORT) -> np.ndarray:
    """A complex state vector of length ``2**n`` with unit norm to ``tol``."""
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1 or psi.size == 0 or psi.size & (psi.size - 1):
        raise ValueError("state must be a vector of length 2**n")
    if n is not None and psi.size != 1 << n:
        raise ValueError(f"state has length {psi.size}, expected {1 << n}")
    if not np.all(np.isfinite(psi)):
        raise ValueError("state has non-finite amplitudes")
    if abs(np.linalg.norm(psi) - 1.0) > tol:
        raise ValueError("state is not normalised")
    return psi


def check_density_matrix(rho, n: int | None = None, herm_tol: float = 1e-8, trace_tol: float = 1e-6,
                         eig_tol: float = 1e-6) -> np.ndarray:
    """A Hermitian, unit-trace, positive ``2**n`` square matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] & (rho.shape[0] - 1):
        raise ValueError("density matrix must be square of size 2**n")
    if n is not None and rho.shape[0] != 1 << n:
        raise ValueError(f"density matrix has size {rho.shape[0]}, expected {1 << n}")
    if np.max(np.abs(rho - rho.conj().T)) > herm_tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > trace_tol:
        raise ValueError("density matrix does not have unit trace")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0] < -eig_tol:
        raise ValueError("density matrix is not positive")
    return rho


class AdiabaticSolver(BaseEstimator):
    """Closed-system adiabatic algorithm with a run time learned from training instances.

    Parameters
    ----------
    run_time : float, optional
        Fixed total time. When ``None`` the time is calibrated on each
        training instance to reach ``target`` and the median is kept.
    target : float
        Success probability aimed for during calibration.
    tol : float
        Calibration tolerance on the success probability.
    perturbation : {None, "K1", "K2", "K3"}
        Control-error field applied at prediction time.
    strength : float
        ``C1``, ``C2`` or (integer) ``C3``.
    direction_seed : int
        Seed of the random field directions.
    rel_tol, abs_tol : float
        Integrator tolerances.
    """

    def __init__(self, run_time=None, target=0.5, tol=0.02, perturbation=None, strength=0.0,
                 direction_seed=0, rel_tol=1e-8, abs_tol=1e-10):
        self.run_time = run_time
        self.target = target
        self.tol = tol
        self.perturbation = perturbation
        self.strength = strength
        self.direction_seed = direction_seed
        self.rel_tol = rel_tol
        self.abs_tol = abs_tol

    def _config(self) -> EvolutionConfig:
        return EvolutionConfig(rel_tol=self.rel_tol, abs_tol=self.abs_tol)

    def _spec(self, inst: Ec3Instance) -> HamiltonianSpec:
        if self.perturbation is None:
            return HamiltonianSpec.from_instance(inst)
        if self.perturbation not in KINDS:
            raise ValueError(f"perturbation must be one of {KINDS} or None")
        pert = Perturbation.from_seed(self.perturbation, self.strength, inst.n, self.direction_seed)
        return HamiltonianSpec.from_instance(inst, pert)

    def fit(self, X, y=None):
        insts = check_instances(X)
        if self.run_time is not None:
            if not self.run_time > 0:
                raise ValueError("run_time must be positive")
            self.calibrated_times_ = np.array([float(self.run_time)])
        else:
            cfg = self._config()
            self.calibrated_times_ = np.array([
                find_runtime(HamiltonianSpec.from_instance(i), self.target, self.tol, cfg) for i in insts
            ])
        self.run_time_ = float(np.median(self.calibrated_times_))
        last = self._run(insts[-1])
        self.final_state_ = last.final_state
        self.success_probability_ = last.success_probability
        self.n_bits_ = insts[-1].n
        return self

    def _run(self, inst: Ec3Instance):
        return evolve(self._spec(inst), self.run_time_, self._config())

    def predict_proba(self, X) -> np.ndarray:
        """Readout distribution ``|<z|psi(T)>|^2`` for each instance (equal ``n`` required)."""
        check_is_fitted(self, "run_time_")
        insts = check_instances(X)
        if len({i.n for i in insts}) != 1:
            raise ValueError("predict_proba needs instances with a common bit count")
        return np.array([np.abs(self._run(i).final_state) ** 2 for i in insts])

    def predict(self, X) -> np.ndarray:
        """Most likely readout for each instance."""
        check_is_fitted(self, "run_time_")
        return np.array([int(np.argmax(np.abs(self._run(i).final_state))) for i in check_instances(X)])

    def score(self, X, y=None) -> float:
        """Mean success probability over the instances."""
        check_is_fitted(self, "run_time_")
        insts = check_instances(X)
        return float(np.mean([success_probability(self._run(i).final_state, i) for i in insts]))


class ThermalAdiabaticSolver(BaseEstimator):
    """Adiabatic run coupled to a photon bath at a fixed temperature (``n <= 4``)."""

    def __init__(self, run_time=10.0, temperature=1.0, lambda_sq=0.1, rel_tol=1e-8, abs_tol=1e-10):
        self.run_time = run_time
        self.temperature = temperature
        self.lambda_sq = lambda_sq
        self.rel_tol = rel_tol
        self.abs_tol = abs_tol

    def _run(self, inst: Ec3Instance):
        bath = BathParams.from_temperature(self.lambda_sq, self.temperature)
        cfg = EvolutionConfig(rel_tol=self.rel_tol, abs_tol=self.abs_tol)
        return evolve_master(inst, float(self.run_time), bath, cfg, MASTER_MAX_BITS)

    def fit(self, X, y=None):
        insts = check_instances(X)
        res = self._run(insts[-1])
        self.density_matrix_ = check_density_matrix(res.rho, insts[-1].n, eig_tol=1e-4)
        self.success_probability_ = res.success_probability
        self.trace_error_ = res.trace_error
        self.min_eigenvalue_ = res.min_eigenvalue
        self.n_bits_ = insts[-1].n
        return self

    def predict_proba(self, X) -> np.ndarray:
        check_is_fitted(self, "density_matrix_")
        insts = check_instances(X)
        if len({i.n for i in insts}) != 1:
            raise ValueError("predict_proba needs instances with a common bit count")
        return np.array([np.real(np.diag(self._run(i).rho)) for i in insts])

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)

    def score(self, X, y=None) -> float:
        check_is_fitted(self, "density_matrix_")
        return float(np.mean([self._run(i).success_probability for i in check_instances(X)]))


class GapAnalyzer(TransformerMixin, BaseEstimator):
    """Maps instances to ``[delta, s_star, e_cal, e_cal / delta**2]`` feature rows."""

    feature_names = ("delta", "s_star", "e_cal", "adiabatic_scale")

    def __init__(self, grid_points=201):
        self.grid_points = grid_points

    def fit(self, X, y=None):
        check_instances(X)
        self.n_features_out_ = len(self.feature_names)
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "n_features_out_")
        rows = []
        for inst in check_instances(X):
            rep = min_gap(HamiltonianSpec.from_instance(inst), self.grid_points)
            rows.append((rep.delta, rep.s_star, rep.e_cal, rep.adiabatic_scale))
        return np.array(rows)

    def get_feature_names_out(self, input_features=None) -> np.ndarray:
        return np.array(self.feature_names, dtype=object)


__all__ = [
    "AdiabaticSolver", "GapAnalyzer", "ThermalAdiabaticSolver", "check_density_matrix", "check_instances",
    "check_state",
]
