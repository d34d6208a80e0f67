"""Hamiltonians for adiabatic exact cover.

The interpolating family is ``H(s) = (1 - s) H_B + s H_P`` with an optional
single-qubit field perturbation ``K(s) = envelope(s) * sum_i m_i . sigma_i``.
Everything can be applied matrix-free to a state vector in ``O(n 2**n)`` or
materialised as a dense matrix for small registers.

Pauli conventions, with bit ``i`` the ``i``-th least significant bit of the
basis index::

    sigma_x |0> = |1>,   sigma_x |1> = |0>
    sigma_y |0> = i|1>,  sigma_y |1> = -i|0>
    sigma_z |0> = |0>,   sigma_z |1> = -|1>
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from .ec3 import Ec3Instance, violation_table

PerturbationKind = Literal["K1", "K2", "K3"]
KINDS = ("K1", "K2", "K3")

DENSE_DEFAULT_CAP = 12
DENSE_HARD_CAP = 14


class DimensionError(ValueError):
    """State or matrix size does not match the register."""


class CapError(ValueError):
    """Requested representation is too large for this register size."""


def random_directions(n: int, rng_seed: int) -> np.ndarray:
    """``n`` unit vectors uniform on the sphere, shape ``(n, 3)``.

    Drawn as normalised triples of standard normal deviates.
    """
    if n < 1:
        raise ValueError("need at least one direction")
    g = np.random.default_rng(rng_seed).standard_normal((n, 3))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


@dataclass(frozen=True, eq=False)
class Perturbation:
    """Random-direction field of fixed magnitude on every qubit.

    ``strength`` is ``C1`` or ``C2`` (real) for K1/K2 and the integer
    frequency ``C3`` for K3. ``seed`` is kept so configs can store the
    directions by seed instead of by value.
    """

    kind: PerturbationKind
    strength: float
    directions: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown perturbation kind {self.kind!r}")
        m = np.asarray(self.directions, dtype=float)
        if m.ndim != 2 or m.shape[1] != 3:
            raise ValueError("directions must have shape (n, 3)")
        if np.max(np.abs(np.linalg.norm(m, axis=1) - 1.0)) > 1e-12:
            raise ValueError("field directions must be unit vectors")
        m.setflags(write=False)
        object.__setattr__(self, "directions", m)
        if self.kind == "K3":
            c3 = self.strength
            if int(c3) != c3 or c3 < 0:
                raise ValueError(f"K3 frequency must be a nonnegative integer, got {c3}")
            object.__setattr__(self, "strength", int(c3))
        else:
            object.__setattr__(self, "strength", float(self.strength))

    @classmethod
    def from_seed(cls, kind: PerturbationKind, strength: float, n: int, seed: int) -> "Perturbation":
        return cls(kind, strength, random_directions(n, seed), seed)

    @property
    def n(self) -> int:
        return self.directions.shape[0]

    def with_strength(self, strength: float) -> "Perturbation":
        return replace(self, strength=strength)

    def to_config(self) -> dict:
        if self.seed is None:
            raise ValueError("only seeded perturbations can be serialised")
        return {"kind": self.kind, "strength": self.strength, "seed": self.seed}

    @classmethod
    def from_config(cls, cfg: dict, n: int) -> "Perturbation":
        return cls.from_seed(cfg["kind"], cfg["strength"], n, int(cfg["seed"]))


def envelope(p: Perturbation, s: float, swap_s: bool = False) -> float:
    """Time profile of the perturbation at interpolation parameter ``s``.

    ``swap_s`` replaces ``s`` by ``1 - s`` and only affects K1.
    """
    if p.kind == "K1":
        return p.strength * ((1.0 - s) if swap_s else s)
    if p.kind == "K2":
        return p.strength * np.sin(np.pi * s)
    return 0.5 * np.sin(p.strength * np.pi * s)


@dataclass(frozen=True, eq=False)
class ProblemHamiltonian:
    """Diagonal problem Hamiltonian, ``diag[z] = h(z)``."""

    diag: np.ndarray

    @classmethod
    def from_instance(cls, inst: Ec3Instance) -> "ProblemHamiltonian":
        return cls(violation_table(inst))

    @property
    def ground_index(self) -> int:
        zero = np.flatnonzero(self.diag == self.diag.min())
        if len(zero) != 1:
            raise ValueError("problem Hamiltonian has a degenerate ground state")
        return int(zero[0])


@dataclass(frozen=True, eq=False)
class BeginningHamiltonian:
    """``H_B = sum_i d_i (1 - sigma_x^(i)) / 2`` with ``d_i`` the clause degree of bit ``i``."""

    degree: np.ndarray

    @classmethod
    def from_instance(cls, inst: Ec3Instance) -> "BeginningHamiltonian":
        return cls(inst.degrees())

    @property
    def offset(self) -> float:
        return 0.5 * float(np.sum(self.degree))


@dataclass(frozen=True, eq=False)
class HamiltonianSpec:
    problem: ProblemHamiltonian
    beginning: BeginningHamiltonian
    perturbation: Perturbation | None = None
    swap_s: bool = False
    n: int = field(init=False)

    def __post_init__(self):
        n = len(self.beginning.degree)
        if len(self.problem.diag) != 1 << n:
            raise DimensionError("problem and beginning Hamiltonians disagree on n")
        if self.perturbation is not None and self.perturbation.n != n:
            raise DimensionError("perturbation has the wrong number of directions")
        object.__setattr__(self, "n", n)

    @classmethod
    def from_instance(cls, inst: Ec3Instance, perturbation: Perturbation | None = None,
                      swap_s: bool = False) -> "HamiltonianSpec":
        return cls(ProblemHamiltonian.from_instance(inst), BeginningHamiltonian.from_instance(inst),
                   perturbation, swap_s)

    @property
    def dim(self) -> int:
        return 1 << self.n

    def with_perturbation(self, perturbation: Perturbation | None) -> "HamiltonianSpec":
        return replace(self, perturbation=perturbation)

    def unperturbed(self) -> "HamiltonianSpec":
        return replace(self, perturbation=None, swap_s=False)

    def field_envelope(self, s: float) -> float:
        if self.perturbation is None:
            return 0.0
        return envelope(self.perturbation, s, self.swap_s)


def _pairs(v: np.ndarray, i: int) -> np.ndarray:
    # view with axis 1 indexing bit i
    return v.reshape(-1, 2, 1 << i, v.shape[-1])


def _apply_field(v: np.ndarray, directions: np.ndarray) -> np.ndarray:
    out = np.zeros_like(v)
    for i, (mx, my, mz) in enumerate(directions):
        w = _pairs(v, i)
        o = _pairs(out, i)
        o[:, 0] += mz * w[:, 0] + (mx - 1j * my) * w[:, 1]
        o[:, 1] += (mx + 1j * my) * w[:, 0] - mz * w[:, 1]
    return out


def _apply_beginning(v: np.ndarray, degree: np.ndarray) -> np.ndarray:
    out = 0.5 * float(np.sum(degree)) * v
    for i, d in enumerate(degree):
        w = _pairs(v, i)
        o = _pairs(out, i)
        o[:, 0] -= 0.5 * d * w[:, 1]
        o[:, 1] -= 0.5 * d * w[:, 0]
    return out


def apply(spec: HamiltonianSpec, s: float, v: np.ndarray) -> np.ndarray:
    """Matrix-free ``(H(s) + K(s)) v``.

    ``v`` may be a single state of length ``2**n`` or a ``(2**n, k)``
    block of column states.
    """
    v = np.asarray(v)
    if v.shape[0] != spec.dim or v.ndim > 2:
        raise DimensionError(f"state of shape {v.shape} does not fit n={spec.n}")
    flat = v.ndim == 1
    x = v.reshape(spec.dim, -1).astype(complex, copy=False)
    out = (1.0 - s) * _apply_beginning(x, spec.beginning.degree)
    out += s * spec.problem.diag[:, None] * x
    e = spec.field_envelope(s)
    if e != 0.0:
        out += e * _apply_field(x, spec.perturbation.directions)
    return out[:, 0] if flat else out


def _check_cap(n: int, cap: int) -> None:
    if cap > DENSE_HARD_CAP:
        raise CapError(f"dense cap cannot exceed n={DENSE_HARD_CAP}")
    if n > cap:
        raise CapError(f"dense matrices limited to n <= {cap} (got n={n})")


def beginning_dense(degree: np.ndarray) -> np.ndarray:
    n = len(degree)
    dim = 1 << n
    z = np.arange(dim)
    h = np.zeros((dim, dim))
    h[z, z] = 0.5 * np.sum(degree)
    for i, d in enumerate(degree):
        h[z ^ (1 << i), z] -= 0.5 * d
    return h


def field_dense(directions: np.ndarray) -> np.ndarray:
    n = directions.shape[0]
    dim = 1 << n
    z = np.arange(dim)
    k = np.zeros((dim, dim), dtype=complex)
    for i, (mx, my, mz) in enumerate(directions):
        bit = (z >> i) & 1
        sign = 1 - 2 * bit
        k[z, z] += mz * sign
        # column z maps to row z ^ 2**i: sigma_x gives 1, sigma_y gives i*(-1)**bit
        k[z ^ (1 << i), z] += mx + 1j * my * sign
    return k


def dense(spec: HamiltonianSpec, s: float, cap: int = DENSE_DEFAULT_CAP) -> np.ndarray:
    """Dense ``H(s) + K(s)`` as a complex ``2**n x 2**n`` array."""
    _check_cap(spec.n, cap)
    h = (1.0 - s) * beginning_dense(spec.beginning.degree).astype(complex)
    h[np.diag_indices(spec.dim)] += s * spec.problem.diag
    e = spec.field_envelope(s)
    if e != 0.0:
        h += e * field_dense(spec.perturbation.directions)
    return h


def d_ds(spec: HamiltonianSpec, cap: int = DENSE_DEFAULT_CAP) -> np.ndarray:
    """``H_P - H_B``, the derivative of the unperturbed family."""
    _check_cap(spec.n, cap)
    h = -beginning_dense(spec.beginning.degree).astype(complex)
    h[np.diag_indices(spec.dim)] += spec.problem.diag
    return h


class HamiltonianOperator:
    """Callable ``(s, v) -> (H(s) + K(s)) v`` for repeated use in integrators.

    Small registers use precomputed dense blocks, larger ones fall back to
    the matrix-free path.
    """

    def __init__(self, spec: HamiltonianSpec, dense_below: int = 8):
        self.spec = spec
        self.use_dense = spec.n <= dense_below
        if self.use_dense:
            self._hb = beginning_dense(spec.beginning.degree)
            self._hp = spec.problem.diag.astype(float)
            self._k = None if spec.perturbation is None else field_dense(spec.perturbation.directions)

    def __call__(self, s: float, v: np.ndarray) -> np.ndarray:
        if not self.use_dense:
            return apply(self.spec, s, v)
        out = (1.0 - s) * (self._hb @ v) + s * (self._hp * v)
        e = self.spec.field_envelope(s)
        if e != 0.0:
            out += e * (self._k @ v)
        return out


def uniform_state(n: int) -> np.ndarray:
    """Uniform superposition, the ground state of ``H_B``."""
    dim = 1 << n
    return np.full(dim, dim ** -0.5, dtype=complex)


def basis_state(n: int, z: int) -> np.ndarray:
    v = np.zeros(1 << n, dtype=complex)
    v[z] = 1.0
    return v
