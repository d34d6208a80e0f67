"""Spectra of the interpolating Hamiltonian: gaps, matrix elements, overlaps."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .operators import DENSE_DEFAULT_CAP, HamiltonianSpec, d_ds, dense

DEGENERACY_TOL = 1e-10
_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


class DegeneracyWarning(UserWarning):
    """An eigenvalue gap fell below the degeneracy tolerance."""


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Ascending eigenvalues and matching orthonormal eigenvector columns."""

    energies: np.ndarray
    states: np.ndarray

    def residual(self, h: np.ndarray) -> float:
        r = h @ self.states - self.states * self.energies
        return float(np.max(np.linalg.norm(r, axis=0)))

    def orthonormality_error(self) -> float:
        g = self.states.conj().T @ self.states
        return float(np.max(np.abs(g - np.eye(len(g)))))


def fix_gauge(states: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real and positive."""
    idx = np.argmax(np.abs(states), axis=0)
    lead = states[idx, np.arange(states.shape[1])]
    return states * (np.abs(lead) / lead)


def eigensystem(h: np.ndarray, herm_tol: float = 1e-8) -> EigenSystem:
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {h.shape}")
    asym = np.max(np.abs(h - h.conj().T)) if h.size else 0.0
    if asym > herm_tol:
        raise ValueError(f"matrix is not Hermitian (max asymmetry {asym:.3g})")
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigendecomposition failed to converge: {exc}") from exc
    return EigenSystem(w, fix_gauge(v))


def _low_energies(h: np.ndarray, k: int) -> np.ndarray:
    if k >= h.shape[0] or h.shape[0] <= 64:
        return np.linalg.eigvalsh(h)[:k]
    return scipy.linalg.eigh(h, eigvals_only=True, subset_by_index=[0, k - 1], driver="evr")


@dataclass(frozen=True, eq=False)
class GapReport:
    """Minimum gap over ``s`` in ``[0, 1]`` plus the coarse scan it came from.

    ``grid`` rows are ``(s, E0, E1, ..., E_{levels-1})``; ``e_cal`` is the
    largest ``|<1,s| dH/ds |0,s>|`` seen on the grid.
    """

    delta: float
    s_star: float
    e_cal: float
    grid: np.ndarray
    degenerate: bool = False
    local_minima: tuple[tuple[float, float], ...] = field(default=())

    @property
    def adiabatic_scale(self) -> float:
        """``E / delta**2``, the run-time scale of the adiabatic condition."""
        return self.e_cal / self.delta ** 2


def _golden_min(f, a: float, b: float, tol: float) -> tuple[float, float]:
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc < fd else (d, fd)


def min_gap(spec: HamiltonianSpec, grid_points: int = 201, levels: int = 3,
            s_tol: float = 1e-6, n_refine: int = 3, cap: int = DENSE_DEFAULT_CAP) -> GapReport:
    """Locate ``min_s E1(s) - E0(s)`` by a uniform scan and golden-section refinement.

    The perturbation, if any, is part of the scanned Hamiltonian. The
    ``n_refine`` lowest local minima of the coarse scan are each refined
    to ``|ds| <= s_tol``.
    """
    if grid_points < 11:
        raise ValueError("grid_points must be at least 11")
    levels = max(2, min(levels, spec.dim))
    s_grid = np.linspace(0.0, 1.0, grid_points)
    dh = d_ds(spec, cap)
    rows = np.empty((grid_points, levels + 1))
    e_cal = 0.0
    for r, s in enumerate(s_grid):
        es = eigensystem(dense(spec, s, cap))
        rows[r, 0] = s
        rows[r, 1:] = es.energies[:levels]
        m01 = es.states[:, 1].conj() @ dh @ es.states[:, 0]
        e_cal = max(e_cal, abs(m01))
    gaps = rows[:, 2] - rows[:, 1]

    def gap_at(s: float) -> float:
        e = _low_energies(dense(spec, s, cap), 2)
        return float(e[1] - e[0])

    interior = np.arange(grid_points)
    is_min = np.ones(grid_points, dtype=bool)
    is_min[1:] &= gaps[1:] <= gaps[:-1]
    is_min[:-1] &= gaps[:-1] <= gaps[1:]
    candidates = interior[is_min]
    candidates = candidates[np.argsort(gaps[candidates], kind="stable")][:n_refine]

    best_s, best_gap = float(s_grid[np.argmin(gaps)]), float(gaps.min())
    minima = []
    for idx in candidates:
        lo = s_grid[max(idx - 1, 0)]
        hi = s_grid[min(idx + 1, grid_points - 1)]
        s_min, g_min = _golden_min(gap_at, lo, hi, s_tol)
        if gaps[idx] < g_min:
            s_min, g_min = float(s_grid[idx]), float(gaps[idx])
        minima.append((float(s_min), float(g_min)))
        if g_min < best_gap:
            best_s, best_gap = float(s_min), float(g_min)

    degenerate = bool(np.any(gaps[1:-1] < DEGENERACY_TOL)) or (0.0 < best_s < 1.0 and best_gap < DEGENERACY_TOL)
    if degenerate:
        warnings.warn(f"ground state degenerate near s={best_s:.6f} (gap {best_gap:.3g})",
                      DegeneracyWarning, stacklevel=2)
    return GapReport(best_gap, best_s, float(e_cal), rows, degenerate, tuple(minima))


def spectrum_scan(spec: HamiltonianSpec, grid_points: int = 201, levels: int | None = None,
                  cap: int = DENSE_DEFAULT_CAP) -> np.ndarray:
    """Rows ``(s, E0(s), ..., E_{levels-1}(s))`` on a uniform grid over ``[0, 1]``."""
    levels = spec.dim if levels is None else levels
    if not 1 <= levels <= spec.dim:
        raise ValueError(f"levels must be in [1, {spec.dim}]")
    s_grid = np.linspace(0.0, 1.0, grid_points)
    rows = np.empty((grid_points, levels + 1))
    rows[:, 0] = s_grid
    for r, s in enumerate(s_grid):
        rows[r, 1:] = np.linalg.eigvalsh(dense(spec, s, cap))[:levels]
    return rows


def ground_overlap(spec_perturbed: HamiltonianSpec, cap: int = DENSE_DEFAULT_CAP) -> float:
    """``|<phi|phi'>|**2`` between the ground states of ``H_P`` and ``H_P + K1(1)``."""
    p = spec_perturbed.perturbation
    if p is None or p.kind != "K1":
        raise ValueError("ground_overlap needs a K1-perturbed spec")
    phi = spec_perturbed.problem.ground_index
    es = eigensystem(dense(spec_perturbed, 1.0, cap))
    if es.energies[1] - es.energies[0] < DEGENERACY_TOL:
        warnings.warn("perturbed final Hamiltonian has a degenerate ground state",
                      DegeneracyWarning, stacklevel=2)
    return float(abs(es.states[phi, 0]) ** 2)
