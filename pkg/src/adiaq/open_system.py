"""Adiabatic runs coupled to a thermal photon bath (Davies weak-coupling generator).

The generator is built from the instantaneous eigensystem ``{w_a, |a>}`` of
the system Hamiltonian. Population moves from ``|a>`` to ``|b>`` at rate
``W[a, b]``::

    w_b > w_a:  W = lambda^2 g(w_b - w_a)^2  N(w_b - w_a)      sum_i |<b|sigma_+^i|a>|^2
    w_b < w_a:  W = lambda^2 g(w_a - w_b)^2 (N(w_a - w_b) + 1) sum_i |<b|sigma_-^i|a>|^2

with ``N`` the Bose-Einstein occupation, and each pair contributes
``-W[a, b] (P_a rho + rho P_a - 2 |b><a|rho|a><b|)`` to ``drho/dt``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .ec3 import Ec3Instance, violation_table
from .evolution import EvolutionConfig
from .integrate import dopri5
from .operators import CapError, HamiltonianSpec, beginning_dense

logger = logging.getLogger(__name__)

MASTER_MAX_BITS = 4
SPACING_CUTOFF = 1e-9
POSITIVITY_ABORT = 1e-4


class PositivityError(RuntimeError):
    """The density matrix acquired an eigenvalue below ``-1e-4``."""


@dataclass(frozen=True)
class BathParams:
    """Photon bath at inverse temperature ``beta`` with coupling ``lambda_sq``.

    ``spectral_function`` is ``g(w)`` for ``w > 0``; ``None`` means the
    constant ``g = 1``.
    """

    lambda_sq: float
    beta: float
    spectral_function: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.lambda_sq < 0:
            raise ValueError("lambda_sq must be nonnegative")
        if not self.beta > 0:
            raise ValueError("beta must be positive")

    @classmethod
    def from_temperature(cls, lambda_sq: float, temperature: float) -> "BathParams":
        return cls(lambda_sq, 1.0 / temperature)

    @property
    def temperature(self) -> float:
        return 1.0 / self.beta

    def g_squared(self, w: np.ndarray) -> np.ndarray:
        if self.spectral_function is None:
            return np.ones_like(w)
        return np.abs(self.spectral_function(w)) ** 2


def bose_einstein(w: np.ndarray, beta: float) -> np.ndarray:
    with np.errstate(over="ignore", divide="ignore"):
        return 1.0 / np.expm1(beta * w)


def lowering_operators(n: int) -> list[np.ndarray]:
    """``sigma_-^(i) = (sigma_x - i sigma_y) / 2 = |1><0|`` on each qubit."""
    dim = 1 << n
    z = np.arange(dim)
    ops = []
    for i in range(n):
        m = np.zeros((dim, dim))
        up = z[((z >> i) & 1) == 0]
        m[up | (1 << i), up] = 1.0
        ops.append(m)
    return ops


@dataclass(frozen=True, eq=False)
class DaviesRates:
    """Transfer rates in one instantaneous eigenbasis.

    ``rates[a, b]`` moves population from level ``a`` to level ``b``;
    ``degenerate_pairs`` counts level pairs whose spacing fell below the
    cutoff and had their rates zeroed.
    """

    energies: np.ndarray
    states: np.ndarray
    rates: np.ndarray
    degenerate_pairs: int

    @property
    def escape(self) -> np.ndarray:
        return self.rates.sum(axis=1)


def davies_rates(energies: np.ndarray, states: np.ndarray, lowering: list[np.ndarray],
                 bath: BathParams) -> DaviesRates:
    spacing = energies[None, :] - energies[:, None]
    elem = np.zeros_like(spacing)
    for sm in lowering:
        m = states.conj().T @ sm @ states
        elem += np.abs(m) ** 2
    # elem[a, b] = sum_i |<a|sigma_-|b>|^2 = sum_i |<b|sigma_+|a>|^2
    up = spacing > SPACING_CUTOFF
    down = spacing < -SPACING_CUTOFF
    gap = np.abs(spacing)
    occ = bose_einstein(np.where(up | down, gap, 1.0), bath.beta)
    g2 = bath.lambda_sq * bath.g_squared(gap)
    rates = np.where(up, g2 * occ * elem, 0.0) + np.where(down, g2 * (occ + 1.0) * elem.T, 0.0)
    near = (gap <= SPACING_CUTOFF) & ~np.eye(len(energies), dtype=bool)
    return DaviesRates(energies, states, rates, int(np.count_nonzero(near)) // 2)


def dissipator(rho: np.ndarray, rates: DaviesRates) -> np.ndarray:
    v = rates.states
    r = v.conj().T @ rho @ v
    esc = rates.escape
    d = -(esc[:, None] + esc[None, :]) * r
    d[np.diag_indices_from(d)] += 2.0 * (rates.rates.T @ np.real(np.diag(r)))
    return v @ d @ v.conj().T


class DaviesGenerator:
    """``rho -> drho/dt`` for the unperturbed interpolating Hamiltonian at a given ``s``."""

    def __init__(self, spec: HamiltonianSpec, bath: BathParams):
        if spec.perturbation is not None:
            raise ValueError("decoherence runs use the unperturbed Hamiltonian")
        self.spec = spec
        self.bath = bath
        self._hb = beginning_dense(spec.beginning.degree)
        self._hp = np.diag(spec.problem.diag.astype(float))
        self._lowering = lowering_operators(spec.n)
        self.degenerate_evaluations = 0

    def hamiltonian(self, s: float) -> np.ndarray:
        return (1.0 - s) * self._hb + s * self._hp

    def rates(self, s: float) -> DaviesRates:
        w, v = np.linalg.eigh(self.hamiltonian(s))
        r = davies_rates(w, v.astype(complex), self._lowering, self.bath)
        if r.degenerate_pairs:
            self.degenerate_evaluations += 1
        return r

    def __call__(self, s: float, rho: np.ndarray) -> np.ndarray:
        h = self.hamiltonian(s)
        out = -1j * (h @ rho - rho @ h)
        if self.bath.lambda_sq > 0:
            out += dissipator(rho, self.rates(s))
        return out


def davies_rhs(rho: np.ndarray, spec: HamiltonianSpec, s: float, bath: BathParams) -> np.ndarray:
    """One evaluation of the master-equation right-hand side."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (spec.dim, spec.dim):
        raise ValueError(f"density matrix shape {rho.shape} does not fit n={spec.n}")
    gen = DaviesGenerator(spec, bath)
    out = gen(s, rho)
    if gen.degenerate_evaluations:
        logger.info("near-degenerate level spacing at s=%g; affected rates set to zero", s)
    return out


@dataclass(frozen=True, eq=False)
class MasterResult:
    rho: np.ndarray
    success_probability: float
    trace_error: float
    min_eigenvalue: float
    hermiticity_correction: float
    steps_taken: int
    steps_rejected: int
    degenerate_evaluations: int
    run_time: float


def _check_master_cap(n: int, max_bits: int) -> None:
    if n > max_bits:
        raise CapError(f"master equation limited to n <= {max_bits} (got n={n})")


def integrate_master(gen: DaviesGenerator, rho0: np.ndarray, duration: float,
                     s_of_t: Callable[[float], float], cfg: EvolutionConfig | None = None,
                     ) -> tuple[np.ndarray, dict]:
    """Integrate ``drho/dt = L(s(t)) rho`` over ``[0, duration]``.

    Each accepted step is re-symmetrised and checked for positivity.
    """
    cfg = cfg or EvolutionConfig()
    diag = {"trace_error": abs(np.trace(rho0).real - 1.0), "min_eigenvalue": float(np.linalg.eigvalsh(rho0)[0]),
            "hermiticity_correction": 0.0}

    def rhs(t, rho):
        return gen(s_of_t(t), rho)

    def on_accept(t, rho):
        herm = 0.5 * (rho + rho.conj().T)
        diag["hermiticity_correction"] = max(diag["hermiticity_correction"], float(np.max(np.abs(rho - herm))))
        diag["trace_error"] = max(diag["trace_error"], abs(np.trace(herm).real - 1.0))
        lo = float(np.linalg.eigvalsh(herm)[0])
        diag["min_eigenvalue"] = min(diag["min_eigenvalue"], lo)
        if lo < -POSITIVITY_ABORT:
            raise PositivityError(f"density matrix eigenvalue {lo:.3g} at t={t:.6g}; tolerance too loose")
        return herm

    rho, stats = dopri5(rhs, rho0, 0.0, duration, cfg.rel_tol, cfg.abs_tol, h0=duration * cfg.h0_fraction,
                        max_steps=cfg.max_steps, on_accept=on_accept, refresh_after_replace=False)
    diag["steps_taken"] = stats.accepted
    diag["steps_rejected"] = stats.rejected
    return rho, diag


def evolve_master(inst: Ec3Instance | HamiltonianSpec, T: float, bath: BathParams,
                  cfg: EvolutionConfig | None = None, max_bits: int = MASTER_MAX_BITS) -> MasterResult:
    """Adiabatic run of length ``T`` in contact with the bath, from ``|psi(0)><psi(0)|``."""
    spec = inst if isinstance(inst, HamiltonianSpec) else HamiltonianSpec.from_instance(inst)
    _check_master_cap(spec.n, max_bits)
    if T <= 0:
        raise ValueError("run time must be positive")
    gen = DaviesGenerator(spec, bath)
    rho0 = np.full((spec.dim, spec.dim), 1.0 / spec.dim, dtype=complex)
    rho, diag = integrate_master(gen, rho0, T, lambda t: t / T, cfg)
    z = spec.problem.ground_index
    if gen.degenerate_evaluations:
        logger.info("%d generator evaluations hit near-degenerate spacings", gen.degenerate_evaluations)
    return MasterResult(rho, float(rho[z, z].real), diag["trace_error"], diag["min_eigenvalue"],
                        diag["hermiticity_correction"], diag["steps_taken"], diag["steps_rejected"],
                        gen.degenerate_evaluations, float(T))


def relax(spec: HamiltonianSpec, s: float, rho0: np.ndarray, duration: float, bath: BathParams,
          cfg: EvolutionConfig | None = None, max_bits: int = MASTER_MAX_BITS) -> np.ndarray:
    """Evolve ``rho0`` for ``duration`` with the Hamiltonian frozen at ``s``."""
    _check_master_cap(spec.n, max_bits)
    rho, _ = integrate_master(DaviesGenerator(spec, bath), np.asarray(rho0, dtype=complex), duration,
                              lambda t: s, cfg)
    return rho


def gibbs_state(inst: Ec3Instance | np.ndarray, beta: float) -> np.ndarray:
    """``exp(-beta H_P) / Tr exp(-beta H_P)`` as a dense matrix."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    h = violation_table(inst) if isinstance(inst, Ec3Instance) else np.asarray(inst, dtype=float)
    w = np.exp(-beta * (h - h.min()))
    return np.diag(w / w.sum()).astype(complex)


def thermal_success(inst: Ec3Instance, beta: float) -> float:
    """Readout success probability of the problem Hamiltonian's Gibbs state."""
    if inst.satisfying_assignment is None:
        raise ValueError("instance has no recorded satisfying assignment")
    z = inst.satisfying_assignment
    return float(gibbs_state(inst, beta)[z, z].real)


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(a - b))))
