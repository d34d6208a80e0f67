"""Three-bit exact cover (EC3) instances.

An instance is a bit count ``n`` plus a set of clauses, each naming three
distinct bits. A clause is satisfied when exactly one of its bits is 1.
Assignments are integers in ``[0, 2**n)`` where bit ``i`` is the ``i``-th
least significant bit.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

MAX_BITS = 24


class InstanceError(ValueError):
    """Raised for malformed or inconsistent instances."""


class GenerationError(RuntimeError):
    """Raised when the random generator exhausts its restart budget."""


@dataclass(frozen=True, order=True)
class Clause:
    i: int
    j: int
    k: int

    def __post_init__(self):
        bits = tuple(int(b) for b in (self.i, self.j, self.k))
        if min(bits) < 0:
            raise InstanceError(f"negative bit index in clause {bits}")
        if len(set(bits)) != 3:
            raise InstanceError(f"clause bits must be distinct, got {bits}")
        a, b, c = sorted(bits)
        object.__setattr__(self, "i", a)
        object.__setattr__(self, "j", b)
        object.__setattr__(self, "k", c)

    @property
    def bits(self) -> tuple[int, int, int]:
        return (self.i, self.j, self.k)

    def satisfied_mask(self, z: np.ndarray) -> np.ndarray:
        """Vectorised satisfaction test over an array of assignments."""
        z = np.asarray(z)
        ones = ((z >> self.i) & 1) + ((z >> self.j) & 1) + ((z >> self.k) & 1)
        return ones == 1


def _check_assignment(z: int, n: int) -> int:
    z = int(z)
    if z < 0 or z >= (1 << n):
        raise InstanceError(f"assignment {z} out of range for n={n}")
    return z


def clause_satisfied(c: Clause, z: int, n: int | None = None) -> bool:
    """True iff exactly one of the clause's bits is set in ``z``.

    ``n`` is the register width; when given, indices and ``z`` are
    range-checked against it.
    """
    if n is not None:
        if c.k >= n:
            raise InstanceError(f"clause {c.bits} out of range for n={n}")
        _check_assignment(z, n)
    z = int(z)
    return ((z >> c.i) & 1) + ((z >> c.j) & 1) + ((z >> c.k) & 1) == 1


@dataclass(frozen=True)
class Ec3Instance:
    """An EC3 instance.

    Parameters
    ----------
    n : int
        Number of bits, ``1 <= n <= 24``.
    clauses : sequence of Clause or 3-tuples
        Stored in the given order; duplicates are rejected.
    satisfying_assignment : int, optional
        The unique solution, verified exhaustively on construction.
    seed : int, optional
        Generator seed, kept only for provenance.
    comments : tuple of str
        Extra ``#`` lines from an instance file, preserved on write.
    require_coverage : bool
        Reject instances where some bit is in no clause. Only toy
        instances used outside the adiabatic pipeline should disable it.
    """

    n: int
    clauses: tuple[Clause, ...]
    satisfying_assignment: int | None = None
    seed: int | None = None
    comments: tuple[str, ...] = field(default=(), compare=False)
    require_coverage: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        n = int(self.n)
        if not 1 <= n <= MAX_BITS:
            raise InstanceError(f"n must be in [1, {MAX_BITS}], got {n}")
        object.__setattr__(self, "n", n)
        clauses = tuple(c if isinstance(c, Clause) else Clause(*c) for c in self.clauses)
        if len(set(clauses)) != len(clauses):
            raise InstanceError("duplicate clauses")
        for c in clauses:
            if c.k >= n:
                raise InstanceError(f"clause {c.bits} out of range for n={n}")
        object.__setattr__(self, "clauses", clauses)
        missing = sorted(set(range(n)) - {b for c in clauses for b in c.bits})
        if missing and self.require_coverage:
            raise InstanceError(f"bits {missing} appear in no clause; beginning Hamiltonian would be degenerate")
        if self.satisfying_assignment is not None:
            z = _check_assignment(self.satisfying_assignment, n)
            object.__setattr__(self, "satisfying_assignment", z)
            h = violation_table(self)
            if h[z] != 0:
                raise InstanceError(f"assignment {z} violates {h[z]} clauses")
            if np.count_nonzero(h == 0) != 1:
                raise InstanceError("recorded assignment is not the unique solution")

    @property
    def m(self) -> int:
        return len(self.clauses)

    def degrees(self) -> np.ndarray:
        """Number of clauses containing each bit."""
        d = np.zeros(self.n, dtype=np.int64)
        for c in self.clauses:
            d[list(c.bits)] += 1
        return d

    def to_text(self) -> str:
        buf = io.StringIO()
        buf.write(f"{self.n} {self.m}\n")
        for c in self.clauses:
            buf.write(f"{c.i} {c.j} {c.k}\n")
        if self.seed is not None:
            buf.write(f"# seed={self.seed}\n")
        if self.satisfying_assignment is not None:
            buf.write(f"# satisfying_assignment={self.satisfying_assignment}\n")
        for line in self.comments:
            buf.write(f"{line}\n")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "Ec3Instance":
        lines = text.splitlines()
        body = [ln for ln in lines if ln.strip() and not ln.startswith("#")]
        trailer = [ln for ln in lines if ln.startswith("#")]
        if not body:
            raise InstanceError("empty instance file")
        try:
            n, m = (int(t) for t in body[0].split())
            rows = [tuple(int(t) for t in ln.split()) for ln in body[1:]]
        except ValueError as exc:
            raise InstanceError(f"malformed instance file: {exc}") from None
        if len(rows) != m or any(len(r) != 3 for r in rows):
            raise InstanceError(f"expected {m} clause lines of three indices")
        seed = z = None
        extra = []
        for ln in trailer:
            key, _, value = ln[1:].strip().partition("=")
            if key == "seed":
                seed = int(value)
            elif key == "satisfying_assignment":
                z = int(value)
            else:
                extra.append(ln)
        return cls(n, tuple(Clause(*r) for r in rows), z, seed, tuple(extra))

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path: str | os.PathLike) -> "Ec3Instance":
        with open(path, encoding="ascii") as fh:
            return cls.from_text(fh.read())


def violation_count(inst: Ec3Instance, z: int) -> int:
    """Number of clauses violated by assignment ``z``."""
    z = _check_assignment(z, inst.n)
    return sum(not clause_satisfied(c, z) for c in inst.clauses)


def violation_table(inst: Ec3Instance | tuple[int, Sequence[Clause]]) -> np.ndarray:
    """``h(z)`` for every assignment, as an int array of length ``2**n``."""
    if isinstance(inst, Ec3Instance):
        n, clauses = inst.n, inst.clauses
    else:
        n, clauses = inst
    z = np.arange(1 << n, dtype=np.int64)
    h = np.zeros(1 << n, dtype=np.int64)
    for c in clauses:
        h += ~c.satisfied_mask(z)
    return h


def count_satisfying(inst: Ec3Instance | tuple[int, Sequence[Clause]]) -> int:
    """Exhaustive count of assignments with zero violations."""
    n = inst.n if isinstance(inst, Ec3Instance) else inst[0]
    if n > MAX_BITS:
        raise InstanceError(f"exhaustive count limited to n <= {MAX_BITS}")
    return int(np.count_nonzero(violation_table(inst) == 0))


def _all_triples(n: int) -> np.ndarray:
    out = [(a, b, c) for a in range(n) for b in range(a + 1, n) for c in range(b + 1, n)]
    return np.array(out, dtype=np.int64)


def generate_unique(n: int, rng_seed: int, max_restarts: int = 10_000) -> Ec3Instance:
    """Random EC3 instance with exactly one satisfying assignment.

    Clauses are drawn uniformly from the sorted triples of distinct bits,
    skipping repeats, until one assignment survives. If every assignment
    gets eliminated, or the unique survivor leaves some bit uncovered, the
    clause set is discarded and the draw restarts.
    """
    if n < 3:
        raise InstanceError("exact cover needs n >= 3")
    if n > MAX_BITS:
        raise InstanceError(f"n must be <= {MAX_BITS}")
    rng = np.random.default_rng(rng_seed)
    triples = _all_triples(n)
    z = np.arange(1 << n, dtype=np.int64)
    for _ in range(max_restarts + 1):
        alive = np.ones(1 << n, dtype=bool)
        used: set[int] = set()
        chosen: list[Clause] = []
        while True:
            t = int(rng.integers(len(triples)))
            if t in used:
                if len(used) == len(triples):
                    break
                continue
            used.add(t)
            clause = Clause(*triples[t])
            chosen.append(clause)
            alive &= clause.satisfied_mask(z)
            count = np.count_nonzero(alive)
            if count <= 1:
                break
        if count == 1:
            covered = {b for c in chosen for b in c.bits}
            if len(covered) == n:
                return Ec3Instance(n, tuple(chosen), int(np.flatnonzero(alive)[0]), seed=rng_seed)
    raise GenerationError(f"no unique-solution instance for n={n} after {max_restarts} restarts")

