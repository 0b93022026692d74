"""Congruences, congruence lattices, monoliths and subdirect decompositions."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .algebra import FiniteAlgebra, preserves_partition
from .config import MAX_LATTICE_SIZE
from .errors import BudgetExceeded, ElementOutOfRange, NotACongruence


def canonical(labels: Sequence[int]) -> tuple[int, ...]:
    """Least-representative vector of the partition given by arbitrary labels."""
    first: dict = {}
    out = []
    for e, lab in enumerate(labels):
        if isinstance(lab, np.integer):
            lab = int(lab)
        out.append(first.setdefault(lab, e))
    return tuple(out)


@dataclass(frozen=True, eq=False)
class Congruence:
    algebra: FiniteAlgebra
    rep: tuple[int, ...]

    def __eq__(self, other):
        return isinstance(other, Congruence) and self.rep == other.rep and self.algebra == other.algebra

    def __hash__(self):
        return hash(self.rep)

    def __repr__(self):
        return f"Congruence({self.render()})"

    @cached_property
    def array(self) -> np.ndarray:
        return np.array(self.rep, dtype=np.int64)

    @property
    def n_blocks(self):
        return len(set(self.rep))

    def blocks(self) -> list[list[int]]:
        out: dict = {}
        for e, r in enumerate(self.rep):
            out.setdefault(r, []).append(e)
        return [out[r] for r in sorted(out)]

    def block_of(self, a: int) -> list[int]:
        return [e for e, r in enumerate(self.rep) if r == self.rep[a]]

    def related(self, a: int, b: int) -> bool:
        return self.rep[a] == self.rep[b]

    def is_zero(self):
        return all(r == e for e, r in enumerate(self.rep))

    def is_one(self):
        return all(r == 0 for r in self.rep)

    def leq(self, other: "Congruence") -> bool:
        o = other.rep
        return all(o[e] == o[r] for e, r in enumerate(self.rep))

    def __le__(self, other):
        return self.leq(other)

    def __lt__(self, other):
        return self.leq(other) and self.rep != other.rep

    def meet(self, other: "Congruence") -> "Congruence":
        return Congruence(self.algebra, canonical(list(zip(self.rep, other.rep))))

    def join(self, other: "Congruence") -> "Congruence":
        pairs = [(e, r) for e, r in enumerate(self.rep) if e != r]
        pairs += [(e, r) for e, r in enumerate(other.rep) if e != r]
        return cg_generate(self.algebra, pairs)

    def pairs(self) -> list[tuple[int, int]]:
        return [(a, b) for a in range(len(self.rep)) for b in range(len(self.rep)) if self.rep[a] == self.rep[b]]

    def render(self) -> str:
        return json.dumps(self.blocks(), separators=(",", ":"))


def zero(algebra: FiniteAlgebra) -> Congruence:
    return Congruence(algebra, tuple(range(algebra.size)))


def one(algebra: FiniteAlgebra) -> Congruence:
    return Congruence(algebra, (0,) * algebra.size)


def from_blocks(algebra: FiniteAlgebra, blocks: Iterable[Iterable[int]], check: bool = True) -> Congruence:
    """Partition from a block list; missing elements become singletons."""
    labels = list(range(algebra.size))
    seen = set()
    for block in blocks:
        block = [int(x) for x in block]
        for x in block:
            if not 0 <= x < algebra.size:
                raise ElementOutOfRange(f"element {x} not in universe of size {algebra.size}")
            if x in seen:
                raise ValueError(f"element {x} occurs in two blocks")
            seen.add(x)
        for x in block:
            labels[x] = -1 - block[0]
    theta = Congruence(algebra, canonical(labels))
    if check:
        verify_congruence(theta)
    return theta


def verify_congruence(theta: Congruence):
    witness = preserves_partition(theta.algebra, theta.rep)
    if witness is not None:
        name, left, right = witness
        raise NotACongruence(f"{name}{left} and {name}{right} land in different blocks")
    return theta


def cg_generate(algebra: FiniteAlgebra, pairs: Iterable[tuple[int, int]]) -> Congruence:
    """Least congruence containing ``pairs``.

    Labels are merged eagerly; every pair that caused a merge is pushed
    through all basic translations of every operation.
    """
    n = algebra.size
    labels = np.arange(n)
    queue = []

    def merge(xs, ys):
        for x, y in zip(xs.tolist(), ys.tolist()):
            lx, ly = labels[x], labels[y]
            if lx != ly:
                labels[labels == ly] = lx
                queue.append((x, y))

    for a, b in pairs:
        if not (0 <= a < n and 0 <= b < n):
            raise ElementOutOfRange(f"pair {(a, b)} outside universe of size {n}")
        merge(np.array([a]), np.array([b]))
    while queue:
        a, b = queue.pop()
        for op in algebra.operations:
            for pos in range(op.arity):
                xs = np.take(op.table, a, axis=pos).ravel()
                ys = np.take(op.table, b, axis=pos).ravel()
                diff = labels[xs] != labels[ys]
                if diff.any():
                    merge(xs[diff], ys[diff])
    return Congruence(algebra, canonical(labels))


def _partition_join(reps: Sequence[int], others: Sequence[int]) -> tuple[int, ...]:
    labels = list(range(len(reps)))

    def find(x):
        while labels[x] != x:
            labels[x] = labels[labels[x]]
            x = labels[x]
        return x

    for e in range(len(reps)):
        for r in (reps[e], others[e]):
            a, b = find(e), find(r)
            if a != b:
                labels[max(a, b)] = min(a, b)
    return canonical([find(e) for e in range(len(reps))])


@dataclass(frozen=True)
class PrimeInterval:
    lower: Congruence
    upper: Congruence

    def render(self) -> str:
        return f"{self.lower.render()} < {self.upper.render()}"


class CongruenceLattice:
    """All congruences of an algebra ordered by block count (desc) then rep."""

    def __init__(self, algebra: FiniteAlgebra, congruences: list[Congruence]):
        self.algebra = algebra
        self.congruences = congruences
        self.index = {c.rep: i for i, c in enumerate(congruences)}
        k = len(congruences)
        self.order = np.array([[a.leq(b) for b in congruences] for a in congruences], dtype=bool)
        covers = []
        for i in range(k):
            for j in range(k):
                if i != j and self.order[i, j]:
                    between = any(
                        m not in (i, j) and self.order[i, m] and self.order[m, j] for m in range(k)
                    )
                    if not between:
                        covers.append((i, j))
        self.covers = covers

    def __len__(self):
        return len(self.congruences)

    def __iter__(self):
        return iter(self.congruences)

    def __contains__(self, theta):
        return theta.rep in self.index

    @property
    def zero(self):
        return self.congruences[0]

    @property
    def one(self):
        return self.congruences[-1]

    def leq(self, a: Congruence, b: Congruence) -> bool:
        return bool(self.order[self.index[a.rep], self.index[b.rep]])

    def meet(self, a, b):
        return a.meet(b)

    def join(self, a, b):
        return self.congruences[self.index[_partition_join(a.rep, b.rep)]]

    def prime_intervals(self) -> list[PrimeInterval]:
        return [PrimeInterval(self.congruences[i], self.congruences[j]) for i, j in self.covers]

    def upper_covers(self, theta):
        i = self.index[theta.rep]
        return [self.congruences[j] for a, j in self.covers if a == i]

    def lower_covers(self, theta):
        j = self.index[theta.rep]
        return [self.congruences[i] for i, b in self.covers if b == j]

    def maximal(self) -> list[Congruence]:
        """Coatoms: congruences covered by 1."""
        return self.lower_covers(self.one)

    def atoms(self):
        return self.upper_covers(self.zero)

    def meet_irreducibles(self) -> list[Congruence]:
        return [c for c in self.congruences if len(self.upper_covers(c)) == 1]


_LATTICES: dict = {}


def con_lattice(algebra: FiniteAlgebra, max_size: int = MAX_LATTICE_SIZE) -> CongruenceLattice:
    """Join closure of the principal congruences, plus 0; verified."""
    cached = _LATTICES.get(algebra.key)
    if cached is not None:
        return cached
    n = algebra.size
    if n > max_size:
        raise BudgetExceeded(f"congruence lattice limited to size {max_size}, got {n}")
    found = {tuple(range(n))}
    principal = set()
    for a, b in itertools.combinations(range(n), 2):
        principal.add(cg_generate(algebra, [(a, b)]).rep)
    found |= principal
    frontier = set(principal)
    while frontier:
        fresh = set()
        for x in frontier:
            for p in principal:
                j = _partition_join(x, p)
                if j not in found:
                    fresh.add(j)
        found |= fresh
        frontier = fresh
    congruences = sorted((Congruence(algebra, r) for r in found), key=lambda c: (-c.n_blocks, c.rep))
    for theta in congruences:
        verify_congruence(theta)
    lattice = CongruenceLattice(algebra, congruences)
    _LATTICES[algebra.key] = lattice
    return lattice


def monolith(algebra: FiniteAlgebra) -> tuple[bool, Congruence | None]:
    """(is subdirectly irreducible, monolith). A one-element algebra counts as SI."""
    if algebra.size == 1:
        return True, one(algebra)
    lattice = con_lattice(algebra)
    mu = lattice.one
    for theta in lattice.congruences[1:]:
        mu = mu.meet(theta)
    if mu.is_zero():
        return False, None
    return True, lattice.congruences[lattice.index[mu.rep]]


def is_si(algebra: FiniteAlgebra) -> bool:
    return monolith(algebra)[0]


def meet_irreducible_decomposition(algebra: FiniteAlgebra) -> list[Congruence]:
    """Shortest list of meet-irreducible congruences meeting to 0.

    Candidates are ordered by fewer blocks, then rep, and combinations are
    tried in that order so the result is deterministic.
    """
    lattice = con_lattice(algebra)
    bottom = lattice.zero
    if algebra.size == 1 or len(lattice.upper_covers(bottom)) == 1:
        return [bottom]
    candidates = sorted(lattice.meet_irreducibles(), key=lambda c: (c.n_blocks, c.rep))
    for length in range(1, len(candidates) + 1):
        for combo in itertools.combinations(candidates, length):
            m = combo[0]
            for theta in combo[1:]:
                m = m.meet(theta)
            if m.is_zero():
                return list(combo)
    raise AssertionError("meet-irreducibles always meet to 0")
