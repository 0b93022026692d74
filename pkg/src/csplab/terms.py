"""Term search in finite powers: WNU terms, semilattice edges, the dot operation
and unary polynomial orbits."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .algebra import FiniteAlgebra, TupleSet, restrict_algebra
from .closure import Closure, TermWitness, closure
from .congruence import Congruence, con_lattice, zero
from .errors import NotFound


def find_term_by_pattern(
    algebra: FiniteAlgebra,
    arity: int,
    rows: Sequence[Sequence[int]],
    accept: Callable[[np.ndarray], np.ndarray],
    budget: int | None = None,
) -> TermWitness | None:
    """Search the ``arity``-ary clone for a term whose values on ``rows`` pass ``accept``.

    ``rows[r]`` is the r-th argument tuple; ``accept`` maps an ``(N, len(rows))``
    array of candidate output vectors to a boolean mask. The closure is run to
    exhaustion if nothing matches, so ``None`` means no such term exists.
    """
    gens = [tuple(int(row[i]) for row in rows) for i in range(arity)]
    result = closure([algebra] * len(rows), gens, budget=budget, stop=accept)
    if result.found is None:
        return None
    return result.witness(result.found)


def exact_pattern(targets: Sequence[int]):
    target = np.asarray(targets)
    return lambda out: (out == target).all(axis=1)


def maltsev_pattern(algebra: FiniteAlgebra):
    rows, targets = [], []
    for x, y in itertools.product(range(algebra.size), repeat=2):
        rows += [(x, y, y), (y, y, x)]
        targets += [x, x]
    return rows, exact_pattern(targets)


def majority_pattern(algebra: FiniteAlgebra):
    rows, targets = [], []
    for x, y in itertools.product(range(algebra.size), repeat=2):
        rows += [(x, x, y), (x, y, x), (y, x, x)]
        targets += [x, x, x]
    return rows, exact_pattern(targets)


def find_maltsev(algebra: FiniteAlgebra) -> TermWitness | None:
    rows, accept = maltsev_pattern(algebra)
    return find_term_by_pattern(algebra, 3, rows, accept)


def find_majority(algebra: FiniteAlgebra) -> TermWitness | None:
    rows, accept = majority_pattern(algebra)
    return find_term_by_pattern(algebra, 3, rows, accept)


def wnu_exists(algebra: FiniteAlgebra, k: int, budget: int | None = None) -> TermWitness | None:
    """A k-ary weak near-unanimity term, or None if the clone has none."""
    if k < 3:
        raise ValueError("WNU arity must be at least 3")
    pairs = [(x, y) for x in range(algebra.size) for y in range(algebra.size) if x != y]
    rows = []
    for x, y in pairs:
        for j in range(k):
            rows.append(tuple(y if i == j else x for i in range(k)))
    n_pairs = len(pairs)

    def accept(out):
        blocks = out.reshape(len(out), n_pairs, k)
        return (blocks == blocks[:, :, :1]).all(axis=(1, 2))

    return find_term_by_pattern(algebra, k, rows, accept, budget=budget)


@dataclass(frozen=True)
class Tractable:
    witness: TermWitness
    arity: int

    def describe(self):
        return f"Tractable: WNU arity {self.arity}, witness {self.witness.to_sexpr()}"


@dataclass(frozen=True)
class NoWitnessUpTo:
    k_max: int

    def describe(self):
        return f"NoWitnessUpTo({self.k_max})"


def default_max_arity(algebra: FiniteAlgebra) -> int:
    return max(4, algebra.size + 1)


def classify_dichotomy(algebra: FiniteAlgebra, k_max: int | None = None):
    """Least WNU arity in [3, k_max]; silent about anything beyond the bound."""
    k_max = default_max_arity(algebra) if k_max is None else k_max
    for k in range(3, k_max + 1):
        w = wnu_exists(algebra, k)
        if w is not None:
            return Tractable(w, k)
    return NoWitnessUpTo(k_max)


@dataclass(frozen=True)
class EdgeCert:
    """``f(a,a)=a`` and ``f(a,b) = f(b,a) = f(b,b) = b`` modulo ``theta``.

    ``theta`` is a congruence of the subalgebra on ``universe`` (= Sg{a,b}),
    whose i-th element is ``universe[i]``.
    """

    a: int
    b: int
    universe: tuple[int, ...]
    theta: Congruence
    witness: TermWitness
    kind: str

    def equiv(self, x: int, y: int) -> bool:
        idx = self.universe
        return self.theta.rep[idx.index(x)] == self.theta.rep[idx.index(y)]

    @property
    def thin(self):
        return self.kind == "thin-semilattice"


@dataclass(frozen=True)
class EdgeScan:
    edges: tuple[EdgeCert, ...]
    thin: frozenset

    @property
    def semilattice_free(self):
        return not self.edges

    def __iter__(self):
        yield list(self.edges)
        yield self.semilattice_free


_EDGES: dict = {}


def _binary_rows(pairs):
    """Generators x, y of the binary clone evaluated on the listed argument pairs."""
    return [tuple(p[0] for p in pairs), tuple(p[1] for p in pairs)]


def scan_semilattice_edges(algebra: FiniteAlgebra) -> EdgeScan:
    """Certificates for every semilattice edge, in both orientations.

    For each pair a<b: one closure gives all binary term values at
    (a,a),(a,b),(b,a),(b,b); then each maximal congruence of Sg{a,b} (all of
    which separate a and b) and the equality relation are tested.
    """
    cached = _EDGES.get(algebra.key)
    if cached is not None:
        return cached
    edges = []
    thin = set()
    for a, b in itertools.combinations(range(algebra.size), 2):
        clo = closure([algebra] * 4, _binary_rows([(a, a), (a, b), (b, a), (b, b)]))
        sub_elems = sorted(set(clo.rows.ravel().tolist()))
        sub, universe = restrict_algebra(algebra, sub_elems)
        lattice = con_lattice(sub)
        thetas = list(lattice.maximal())
        bottom = zero(sub)
        if bottom not in thetas:
            thetas.append(bottom)
        pos = {x: i for i, x in enumerate(universe)}
        lookup = np.full(algebra.size, -1)
        lookup[list(universe)] = np.arange(len(universe))
        local = lookup[clo.rows]
        for theta in thetas:
            rep = np.array(theta.rep)
            vals = rep[local]
            # columns (a,a),(a,b),(b,a),(b,b); toward b reads the last three
            for src, dst, cols in ((a, b, [1, 2, 3]), (b, a, [0, 1, 2])):
                target = rep[pos[dst]]
                hit = np.flatnonzero((vals[:, cols] == target).all(axis=1))
                if hit.size:
                    kind = "thin-semilattice" if theta.is_zero() else "semilattice"
                    w = clo.witness(int(hit[0]))
                    edges.append(EdgeCert(src, dst, universe, theta, w, kind))
                    if theta.is_zero():
                        thin.add((src, dst))
    scan = EdgeScan(tuple(sorted(edges, key=lambda e: (e.a, e.b, e.kind, e.theta.rep))), frozenset(thin))
    _EDGES[algebra.key] = scan
    return scan


def is_semilattice_free(algebra: FiniteAlgebra) -> bool:
    return scan_semilattice_edges(algebra).semilattice_free


def binary_clone(algebra: FiniteAlgebra, budget: int | None = None) -> Closure:
    """Binary term operations as rows indexed by ``a * n + b``."""
    n = algebra.size
    pairs = [(a, b) for a in range(n) for b in range(n)]
    return closure([algebra] * (n * n), _binary_rows(pairs), budget=budget)


_DOTS: dict = {}


def dot_conditions(algebra: FiniteAlgebra, table: np.ndarray, scan: EdgeScan | None = None) -> bool:
    scan = scan_semilattice_edges(algebra) if scan is None else scan
    for cert in scan.edges:
        a, b = cert.a, cert.b
        ab, ba = int(table[a, b]), int(table[b, a])
        if ab not in cert.universe or ba not in cert.universe:
            return False
        if not cert.equiv(ab, ba):
            return False
        if not (cert.equiv(ab, a) or cert.equiv(ab, b)):
            return False
    n = algebra.size
    for a in range(n):
        for b in range(n):
            c = int(table[a, b])
            if c != a and (a, c) not in scan.thin:
                return False
    return True


def find_dot_operation(algebra: FiniteAlgebra, budget: int | None = None) -> TermWitness:
    """First binary term (closure order) that is a semilattice on every edge
    and moves each a only along thin edges.

    The binary clone is generated lazily and the search stops at the first
    qualifying row, so only algebras without a dot pay for the whole clone.
    """
    cached = _DOTS.get(algebra.key)
    if cached is not None:
        return cached
    scan = scan_semilattice_edges(algebra)
    n = algebra.size

    def accept(rows):
        return np.array([dot_conditions(algebra, r.reshape(n, n), scan) for r in rows], dtype=bool)

    pairs = [(a, b) for a in range(n) for b in range(n)]
    clo = closure([algebra] * (n * n), _binary_rows(pairs), budget=budget, stop=accept)
    if clo.found is None:
        raise NotFound(f"no dot operation in the binary clone of {algebra.id}")
    w = clo.witness(clo.found)
    _DOTS[algebra.key] = w
    return w


def unary_poly_orbit(R: TupleSet, slots: Sequence[int], tracked: Sequence[int], budget: int | None = None) -> TupleSet:
    """Images of ``tracked`` under the unary polynomials of ``R``.

    Slot ``s`` carries an element of component ``slots[s]``; the result is a
    relation over those components.
    """
    comps = [R.components[i] for i in slots]
    gens = [tuple(tracked)] + [tuple(r[i] for i in slots) for r in R.sorted()]
    return closure(comps, gens, budget=budget).tuples()
