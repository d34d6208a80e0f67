"""Closed-system adiabatic runs: ``i dpsi/dt = [H(t/T) + K(t/T)] psi``."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .ec3 import Ec3Instance
from .integrate import StepLimitError, dopri5
from .operators import DENSE_DEFAULT_CAP, HamiltonianOperator, HamiltonianSpec, dense, uniform_state

logger = logging.getLogger(__name__)

NORM_ABORT = 1e-3


class NormDriftError(RuntimeError):
    """The state norm drifted by more than one part in a thousand."""


class RuntimeSearchError(RuntimeError):
    """No run time in the search window reaches the target probability."""


@dataclass(frozen=True)
class EvolutionConfig:
    """Integrator settings shared by the pure-state and master-equation runs.

    ``record_stride`` is a time interval; when set, a trajectory row is
    stored at the first accepted step past each multiple of it.
    """

    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_steps: int = 2_000_000
    record_stride: float | None = None
    h0_fraction: float = 1e-3

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.record_stride is not None and self.record_stride <= 0:
            raise ValueError("record_stride must be positive")


@dataclass(frozen=True, eq=False)
class EvolutionResult:
    final_state: np.ndarray
    success_probability: float
    norm_drift: float
    steps_taken: int
    steps_rejected: int
    run_time: float
    trajectory: np.ndarray | None = field(default=None, repr=False)

    TRAJECTORY_HEADER = ("t", "s", "prob_ground", "norm")


def success_probability(psi: np.ndarray, inst: Ec3Instance | int) -> float:
    """``|<z*|psi>|**2`` for the instance's satisfying assignment ``z*``.

    ``inst`` may also be the index ``z*`` itself.
    """
    if isinstance(inst, Ec3Instance):
        if inst.satisfying_assignment is None:
            raise ValueError("instance has no recorded satisfying assignment")
        z = inst.satisfying_assignment
    else:
        z = int(inst)
    return float(abs(psi[z]) ** 2)


def _ground_population(spec: HamiltonianSpec, s: float, psi: np.ndarray) -> float:
    _, v = np.linalg.eigh(dense(spec, s))
    return float(abs(np.vdot(v[:, 0], psi)) ** 2)


def evolve(spec: HamiltonianSpec, T: float, cfg: EvolutionConfig | None = None,
           psi0: np.ndarray | None = None) -> EvolutionResult:
    """Run the adiabatic algorithm for total time ``T`` from the uniform superposition.

    Raises
    ------
    NormDriftError
        If ``| ||psi|| - 1 |`` exceeds 1e-3 at any accepted step.
    StepLimitError
        If ``cfg.max_steps`` is exhausted.
    """
    if T <= 0:
        raise ValueError("run time must be positive")
    cfg = cfg or EvolutionConfig()
    target = spec.problem.ground_index
    psi = uniform_state(spec.n) if psi0 is None else np.asarray(psi0, dtype=complex)
    hop = HamiltonianOperator(spec)
    record = cfg.record_stride is not None and spec.n <= DENSE_DEFAULT_CAP
    rows: list[tuple[float, float, float, float]] = []
    drift = [0.0]
    next_mark = [0.0]

    def rhs(t, y):
        return -1j * hop(t / T, y)

    def on_accept(t, y):
        norm = float(np.linalg.norm(y))
        d = abs(norm - 1.0)
        drift[0] = max(drift[0], d)
        if d > NORM_ABORT:
            raise NormDriftError(f"norm drift {d:.3g} at t={t:.6g}; tolerance too loose")
        if record and t >= next_mark[0]:
            rows.append((t, t / T, _ground_population(spec, t / T, y), norm))
            next_mark[0] += cfg.record_stride * max(1, np.floor((t - next_mark[0]) / cfg.record_stride) + 1)
        return None

    if record:
        rows.append((0.0, 0.0, _ground_population(spec, 0.0, psi), float(np.linalg.norm(psi))))
        next_mark[0] = cfg.record_stride
    y, stats = dopri5(rhs, psi, 0.0, T, cfg.rel_tol, cfg.abs_tol, h0=T * cfg.h0_fraction,
                      max_steps=cfg.max_steps, on_accept=on_accept)
    prob = float(abs(y[target]) ** 2)
    logger.debug("evolve T=%g: prob=%.6f steps=%d rejected=%d", T, prob, stats.accepted, stats.rejected)
    traj = np.array(rows) if record else None
    return EvolutionResult(y, prob, drift[0], stats.accepted, stats.rejected, float(T), traj)


def find_runtime(spec: HamiltonianSpec, target_probability: float, tol: float = 0.02,
                 cfg: EvolutionConfig | None = None, t_min: float = 0.1, t_max: float = 1e4,
                 max_bisect: int = 60) -> float:
    """Smallest run time whose success probability is ``target +- tol``.

    Scans a doubling ladder from ``t_min`` for the first run time at or
    above the target, then bisects in ``log T`` inside that bracket.
    Monotonicity of ``Prob(T)`` is not assumed beyond the bracket.
    """
    if spec.perturbation is not None:
        raise ValueError("run-time calibration uses the unperturbed problem")
    floor = 2.0 ** -spec.n
    if not floor < target_probability < 0.99:
        raise ValueError(f"target must lie in ({floor:.3g}, 0.99)")

    def prob(T):
        return evolve(spec, T, cfg).success_probability

    lo, p_lo = None, floor
    T = t_min
    while True:
        p = prob(T)
        if abs(p - target_probability) <= tol:
            return float(T)
        if p > target_probability:
            hi = T
            break
        lo, p_lo = T, p
        if T >= t_max:
            raise RuntimeSearchError(f"Prob(T) < {target_probability} for all T <= {t_max}")
        T = min(2.0 * T, t_max)
    if lo is None:
        # already above target at t_min; bisect down towards zero
        lo = t_min * 1e-3
    for _ in range(max_bisect):
        mid = float(np.sqrt(lo * hi))
        p = prob(mid)
        if abs(p - target_probability) <= tol:
            return mid
        if p > target_probability:
            hi = mid
        else:
            lo = mid
    raise RuntimeSearchError(f"bisection did not reach tolerance {tol} around T={hi:.6g}")


__all__ = [
    "EvolutionConfig", "EvolutionResult", "NormDriftError", "RuntimeSearchError", "StepLimitError",
    "evolve", "find_runtime", "success_probability",
]
