"""Sweep harness for the decoherence and control-error experiments.

Every sweep turns a :class:`SweepPlan` into a :class:`SweepResult` holding
CSV rows plus a metadata mapping. Grid points are independent jobs; they
run on a bounded worker pool (``ADIAQ_THREADS``, default 1) and are
collected in grid order, so the output never depends on the pool size.
"""

from __future__ import annotations

import logging
import math
import os
import platform
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy

from ._version import __version__
from .ec3 import Ec3Instance, generate_unique, violation_table
from .evolution import EvolutionConfig, evolve, find_runtime
from .open_system import MASTER_MAX_BITS, BathParams, evolve_master, thermal_success
from .operators import DENSE_DEFAULT_CAP, DENSE_HARD_CAP, CapError, HamiltonianSpec, Perturbation
from .spectral import GapReport, ground_overlap, min_gap, spectrum_scan
from .tables import csv_text, write_csv, write_metadata

logger = logging.getLogger(__name__)

KINDS = ("spectrum", "decoherence", "k1", "k2", "k3", "runtime")
HEADERS = {
    "decoherence": ("T", "temperature", "lambda_sq", "success_prob", "thermal_success", "trace_err", "min_eig"),
    "k1": ("C1", "seed", "success_prob", "overlap"),
    "k2": ("C2", "seed", "success_prob", "min_gap"),
    "k3": ("C3", "run_time", "success_prob"),
    "runtime": ("T", "success_prob"),
}
DEFAULT_TEMPERATURES = (0.1, 0.5, 1.0, 2.0, 10.0)
DEFAULT_TARGETS = {"k1": 0.5, "k2": 0.5, "k3": 0.125}


def default_c1_grid(n: int) -> np.ndarray:
    """0 to 1 in steps of 0.05, extended by 1.5, 2, 3, ... up to ``n``."""
    base = np.round(np.arange(21) * 0.05, 2)
    ext = [1.5] + [float(c) for c in range(2, max(n, 2) + 1)]
    return np.concatenate([base, ext])


def default_c2_grid() -> np.ndarray:
    return np.round(np.arange(-12, 13) * 0.25, 2)


def default_c3_grid(n: int, run_time: float, extent: float = 2.0) -> np.ndarray:
    """Integers from 0 to ``ceil(extent * n T / pi)``."""
    return np.arange(0, math.ceil(extent * n * run_time / math.pi) + 1)


def default_t_grid(kind: str) -> np.ndarray:
    if kind == "decoherence":
        return np.geomspace(1.0, 200.0, 16)
    return np.geomspace(0.1, 1000.0, 16)


def worker_count() -> int:
    raw = os.environ.get("ADIAQ_THREADS", "1")
    try:
        count = int(raw)
    except ValueError:
        raise ValueError(f"ADIAQ_THREADS must be a positive integer, got {raw!r}") from None
    if count < 1:
        raise ValueError(f"ADIAQ_THREADS must be a positive integer, got {raw!r}")
    return count


def parallel_map(func: Callable, items: Iterable, workers: int | None = None) -> list:
    """``[func(x) for x in items]`` on a bounded thread pool, results in input order."""
    items = list(items)
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(func, items))


@dataclass(frozen=True)
class SweepPlan:
    """One experiment: what to sweep, on which instance, with which settings.

    The instance is read from ``instance_path`` when given, otherwise
    generated from ``(n, seed)``. ``grid`` holds C values for the
    perturbation kinds and run times for ``decoherence`` and ``runtime``;
    ``None`` selects the declared default. ``run_time`` skips calibration.
    ``c3_extent`` sets the end of the default K3 grid in units of ``nT/pi``.
    """

    kind: str
    n: int | None = None
    seed: int = 0
    instance_path: str | None = None
    grid: tuple[float, ...] | None = None
    direction_seeds: tuple[int, ...] = (0, 1, 2, 3)
    temperatures: tuple[float, ...] = DEFAULT_TEMPERATURES
    lambda_sq: tuple[float, ...] = (0.0, 0.1)
    target: float | None = None
    calibration_tol: float = 0.02
    run_time: float | None = None
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    grid_points: int = 201
    levels: int | None = None
    c3_extent: float = 2.0
    big: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {', '.join(KINDS)}")
        if self.instance_path is None and self.n is None:
            raise ValueError("plan needs an instance file or a bit count")
        if self.grid is not None and len(self.grid) == 0:
            raise ValueError("grid must not be empty")
        if self.kind in ("k1", "k2", "k3") and not self.direction_seeds:
            raise ValueError("perturbation sweeps need at least one direction seed")
        if self.kind == "decoherence" and (not self.temperatures or not self.lambda_sq):
            raise ValueError("decoherence sweeps need temperatures and couplings")
        if self.kind == "k3" and self.grid is not None:
            if any(c < 0 or float(c) != int(c) for c in self.grid):
                raise ValueError("K3 frequencies must be nonnegative integers")
        if self.c3_extent <= 0:
            raise ValueError("c3_extent must be positive")
        if any(t <= 0 for t in self.temperatures):
            raise ValueError("temperatures must be positive")

    @property
    def config(self) -> EvolutionConfig:
        return EvolutionConfig(rel_tol=self.rel_tol, abs_tol=self.abs_tol)

    @property
    def dense_cap(self) -> int:
        return DENSE_HARD_CAP if self.big else DENSE_DEFAULT_CAP

    @property
    def calibration_target(self) -> float:
        return self.target if self.target is not None else DEFAULT_TARGETS.get(self.kind, 0.5)

    def instance(self) -> Ec3Instance:
        if self.instance_path is not None:
            inst = Ec3Instance.load(self.instance_path)
            if self.n is not None and inst.n != self.n:
                raise ValueError(f"instance file has n={inst.n}, plan asks for n={self.n}")
        else:
            inst = generate_unique(self.n, self.seed)
        if inst.satisfying_assignment is None:
            # a file without the comment line: recover z* by exhaustive search
            zeros = np.flatnonzero(violation_table(inst) == 0)
            if len(zeros) != 1:
                raise ValueError(f"instance has {len(zeros)} satisfying assignments, need exactly one")
            inst = Ec3Instance(inst.n, inst.clauses, int(zeros[0]), inst.seed, inst.comments)
        return inst

    def metadata(self, inst: Ec3Instance) -> dict[str, object]:
        meta: dict[str, object] = {
            "kind": self.kind,
            "n": inst.n,
            "m": inst.m,
            "instance_seed": inst.seed if inst.seed is not None else "none",
            "instance_path": self.instance_path or "none",
            "clauses": ";".join(" ".join(str(b) for b in c.bits) for c in inst.clauses),
            "satisfying_assignment": inst.satisfying_assignment,
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
        }
        if self.kind in ("k1", "k2", "k3"):
            meta["direction_seeds"] = self.direction_seeds
            meta["calibration_target"] = self.calibration_target
            meta["calibration_tol"] = self.calibration_tol
        if self.kind == "decoherence":
            meta["temperatures"] = self.temperatures
            meta["lambda_sq"] = self.lambda_sq
        if self.kind in ("spectrum", "k2", "runtime"):
            meta["grid_points"] = self.grid_points
        return meta


@dataclass(eq=False)
class SweepResult:
    kind: str
    header: tuple[str, ...]
    rows: list[tuple]
    metadata: dict[str, object] = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        j = self.header.index(name)
        return np.array([r[j] for r in self.rows], dtype=float)

    def select(self, **equal) -> "SweepResult":
        """Rows whose named columns equal the given values."""
        idx = {k: self.header.index(k) for k in equal}
        rows = [r for r in self.rows if all(r[idx[k]] == v for k, v in equal.items())]
        return SweepResult(self.kind, self.header, rows, dict(self.metadata))

    def to_csv(self) -> str:
        return csv_text(self.header, self.rows)

    def write(self, out_dir: str | Path, stem: str | None = None) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = stem or self.kind
        csv_path = write_csv(out / f"{stem}.csv", self.header, self.rows)
        meta_path = write_metadata(out / f"{stem}.meta", self.metadata)
        return csv_path, meta_path


def provenance() -> dict[str, str]:
    return {
        "adiaq_version": __version__,
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "python_version": platform.python_version(),
    }


def _grid(plan: SweepPlan, default: Sequence[float]) -> np.ndarray:
    return np.asarray(plan.grid if plan.grid is not None else default, dtype=float)


def _check_dense(plan: SweepPlan, n: int) -> None:
    if n > plan.dense_cap:
        hint = "" if plan.big else " (pass --big to allow up to 14 bits)"
        raise CapError(f"n={n} exceeds the dense-matrix cap of {plan.dense_cap}{hint}")


_CALIBRATION_CACHE: dict[tuple, float] = {}


def calibrated_run_time(inst: Ec3Instance, plan: SweepPlan) -> float:
    """Run time putting the unperturbed success near the plan's target (cached)."""
    if plan.run_time is not None:
        if plan.run_time <= 0:
            raise ValueError("run time must be positive")
        return float(plan.run_time)
    key = (inst.to_text(), plan.calibration_target, plan.calibration_tol, plan.rel_tol, plan.abs_tol)
    if key not in _CALIBRATION_CACHE:
        spec = HamiltonianSpec.from_instance(inst)
        _CALIBRATION_CACHE[key] = find_runtime(spec, plan.calibration_target, plan.calibration_tol, plan.config)
        logger.info("calibrated T=%.6g for target %.4g", _CALIBRATION_CACHE[key], plan.calibration_target)
    return _CALIBRATION_CACHE[key]


def _perturbed(spec: HamiltonianSpec, kind: str, strength: float, n: int, seed: int) -> HamiltonianSpec:
    # a zero-strength field is the unperturbed problem; sharing the spec keeps C=0 rows identical across kinds
    if strength == 0:
        return spec
    return spec.with_perturbation(Perturbation.from_seed(kind, strength, n, seed))


def run_spectrum(plan: SweepPlan) -> SweepResult:
    inst = plan.instance()
    _check_dense(plan, inst.n)
    spec = HamiltonianSpec.from_instance(inst)
    rows = spectrum_scan(spec, plan.grid_points, plan.levels, cap=plan.dense_cap)
    rep = min_gap(spec, plan.grid_points, cap=plan.dense_cap)
    header = ("s",) + tuple(f"E{k}" for k in range(rows.shape[1] - 1))
    meta = plan.metadata(inst) | _gap_metadata(rep) | provenance()
    return SweepResult("spectrum", header, [tuple(r) for r in rows], meta)


def _gap_metadata(rep: GapReport) -> dict[str, object]:
    return {"delta": rep.delta, "s_star": rep.s_star, "e_cal": rep.e_cal,
            "adiabatic_scale": rep.adiabatic_scale, "degenerate": rep.degenerate}


def run_runtime_curve(plan: SweepPlan) -> SweepResult:
    inst = plan.instance()
    spec = HamiltonianSpec.from_instance(inst)
    grid = _grid(plan, default_t_grid("runtime"))
    cfg = plan.config
    probs = parallel_map(lambda T: evolve(spec, float(T), cfg).success_probability, grid)
    meta = plan.metadata(inst) | {"T_grid": grid}
    if inst.n <= plan.dense_cap:
        meta |= _gap_metadata(min_gap(spec, plan.grid_points, cap=plan.dense_cap))
    rows = [(float(T), p) for T, p in zip(grid, probs)]
    return SweepResult("runtime", HEADERS["runtime"], rows, meta | provenance())


def run_decoherence(plan: SweepPlan) -> SweepResult:
    """Master-equation success probabilities over couplings, temperatures and run times.

    A zero coupling makes the temperature irrelevant, so each ``lambda_sq=0``
    series is run once and written with ``temperature`` and
    ``thermal_success`` set to ``nan``.
    """
    inst = plan.instance()
    if inst.n > MASTER_MAX_BITS:
        raise CapError(f"master equation limited to n <= {MASTER_MAX_BITS} (got n={inst.n})")
    spec = HamiltonianSpec.from_instance(inst)
    grid = _grid(plan, default_t_grid("decoherence"))
    if np.any(grid <= 0):
        raise ValueError("run times must be positive")
    series = []
    for lam in plan.lambda_sq:
        temps = [math.nan] if lam == 0 else list(plan.temperatures)
        series.extend((float(lam), float(theta)) for theta in temps)
    jobs = [(lam, theta, float(T)) for lam, theta in series for T in grid]
    cfg = plan.config

    def job(args):
        lam, theta, T = args
        bath = BathParams(lam, 1.0 if math.isnan(theta) else 1.0 / theta)
        return evolve_master(spec, T, bath, cfg)

    results = parallel_map(job, jobs)
    rows = []
    for (lam, theta, T), res in zip(jobs, results):
        thermal = math.nan if math.isnan(theta) else thermal_success(inst, 1.0 / theta)
        rows.append((T, theta, lam, res.success_probability, thermal, res.trace_error, res.min_eigenvalue))
    degenerate = sum(r.degenerate_evaluations for r in results)
    meta = plan.metadata(inst) | {"T_grid": grid, "degenerate_evaluations": degenerate}
    return SweepResult("decoherence", HEADERS["decoherence"], rows, meta | provenance())


def run_k1(plan: SweepPlan) -> SweepResult:
    inst = plan.instance()
    _check_dense(plan, inst.n)
    spec = HamiltonianSpec.from_instance(inst)
    T = calibrated_run_time(inst, plan)
    grid = _grid(plan, default_c1_grid(inst.n))
    jobs = [(seed, float(c)) for seed in plan.direction_seeds for c in grid]
    cfg = plan.config

    def job(args):
        seed, c = args
        prob = evolve(_perturbed(spec, "K1", c, inst.n, seed), T, cfg).success_probability
        overlap = ground_overlap(spec.with_perturbation(Perturbation.from_seed("K1", c, inst.n, seed)),
                                 cap=plan.dense_cap)
        return (c, seed, prob, overlap)

    rows = parallel_map(job, jobs)
    meta = plan.metadata(inst) | {"run_time": T, "C1_grid": grid}
    return SweepResult("k1", HEADERS["k1"], rows, meta | provenance())


def run_k2(plan: SweepPlan) -> SweepResult:
    inst = plan.instance()
    _check_dense(plan, inst.n)
    spec = HamiltonianSpec.from_instance(inst)
    T = calibrated_run_time(inst, plan)
    grid = _grid(plan, default_c2_grid())
    jobs = [(seed, float(c)) for seed in plan.direction_seeds for c in grid]
    cfg = plan.config

    def job(args):
        seed, c = args
        pert = _perturbed(spec, "K2", c, inst.n, seed)
        prob = evolve(pert, T, cfg).success_probability
        return (c, seed, prob, min_gap(pert, plan.grid_points, cap=plan.dense_cap).delta)

    rows = parallel_map(job, jobs)
    meta = plan.metadata(inst) | {"run_time": T, "C2_grid": grid}
    return SweepResult("k2", HEADERS["k2"], rows, meta | provenance())


def run_k3(plan: SweepPlan) -> SweepResult:
    """Success versus integer frequency C3 at the calibrated run time and at twice it.

    The first direction seed sets the field directions.
    """
    inst = plan.instance()
    spec = HamiltonianSpec.from_instance(inst)
    T1 = calibrated_run_time(inst, plan)
    times = (T1, 2.0 * T1)
    seed = plan.direction_seeds[0]
    jobs = []
    for T in times:
        grid = plan.grid if plan.grid is not None else default_c3_grid(inst.n, T, plan.c3_extent)
        jobs.extend((T, int(c)) for c in grid)
    cfg = plan.config

    def job(args):
        T, c = args
        return (c, T, evolve(_perturbed(spec, "K3", c, inst.n, seed), T, cfg).success_probability)

    rows = parallel_map(job, jobs)
    meta = plan.metadata(inst) | {
        "run_times": times,
        "direction_seed": seed,
        "c3_extent": plan.c3_extent if plan.grid is None else "none",
        "nT_over_pi": [inst.n * T / math.pi for T in times],
        "C3_max": [max(c for t, c in jobs if t == T) for T in times],
    }
    return SweepResult("k3", HEADERS["k3"], rows, meta | provenance())


RUNNERS = {
    "spectrum": run_spectrum,
    "decoherence": run_decoherence,
    "k1": run_k1,
    "k2": run_k2,
    "k3": run_k3,
    "runtime": run_runtime_curve,
}


def run(plan: SweepPlan) -> SweepResult:
    return RUNNERS[plan.kind](plan)


__all__ = [
    "HEADERS", "KINDS", "SweepPlan", "SweepResult", "calibrated_run_time", "default_c1_grid",
    "default_c2_grid", "default_c3_grid", "default_t_grid", "parallel_map", "provenance", "run",
    "run_decoherence", "run_k1", "run_k2", "run_k3", "run_runtime_curve", "run_spectrum", "worker_count",
]
