"""Separation of prime intervals, quasi-centralizers, alignment and the coupling sets W."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .algebra import FiniteAlgebra, TupleSet
from .closure import closure
from .congruence import Congruence, PrimeInterval, canonical, con_lattice, verify_congruence
from .errors import InternalInconsistency, NotACongruence, NotAligned
from .instance import Instance, restrict_instance


@dataclass(frozen=True)
class SeparationResult:
    separable: bool
    witness: tuple | None = None

    def __bool__(self):
        return self.separable


def _outside_pairs(lower: Congruence, upper: Congruence) -> list[tuple[int, int]]:
    n = len(lower.rep)
    return [
        (a, b) for a in range(n) for b in range(a + 1, n)
        if upper.rep[a] == upper.rep[b] and lower.rep[a] != lower.rep[b]
    ]


_ORBITS: dict = {}


def polynomial_maps(R: TupleSet, i: int, j: int) -> np.ndarray:
    """Unary polynomials of R restricted to components i and j, as full maps.

    Row layout: ``f_i(0..n_i-1)`` followed by ``f_j(0..n_j-1)`` (only the
    first block when ``i == j``).
    """
    key = (tuple(c.key for c in R.components), R.tuples, i, j)
    cached = _ORBITS.get(key)
    if cached is not None:
        return cached
    ni = R.components[i].size
    nj = R.components[j].size
    if i == j:
        slots = [i] * ni
        tracked = list(range(ni))
    else:
        slots = [i] * ni + [j] * nj
        tracked = list(range(ni)) + list(range(nj))
    comps = [R.components[s] for s in slots]
    gens = [tuple(tracked)] + [tuple(r[s] for s in slots) for r in R.sorted()]
    rows = closure(comps, gens).rows
    # sorted for determinism independent of discovery order
    rows = rows[np.lexsort(rows.T[::-1])] if len(rows) else rows
    rows.setflags(write=False)
    _ORBITS[key] = rows
    return rows


def _collapse_mask(maps: np.ndarray, pairs, theta: Congruence) -> np.ndarray:
    """Rows whose map sends every listed pair into theta."""
    rep = np.array(theta.rep)
    ok = np.ones(len(maps), dtype=bool)
    for a, b in pairs:
        ok &= rep[maps[:, a]] == rep[maps[:, b]]
    return ok


def can_separate(R: TupleSet, i: int, ab: PrimeInterval, j: int, gd: PrimeInterval) -> SeparationResult:
    """Is there a unary polynomial f of R with f(beta) not in alpha on side i
    and f(delta) inside gamma on side j?"""
    maps = polynomial_maps(R, i, j)
    ni = R.components[i].size
    left = maps[:, :ni]
    right = left if i == j else maps[:, ni:]
    inside = _collapse_mask(right, _outside_pairs(gd.lower, gd.upper), gd.lower)
    keeps = ~_collapse_mask(left, _outside_pairs(ab.lower, ab.upper), ab.lower)
    hit = np.flatnonzero(inside & keeps)
    if hit.size:
        return SeparationResult(True, tuple(int(x) for x in maps[hit[0]]))
    return SeparationResult(False)


def inseparable(R: TupleSet, i: int, ab: PrimeInterval, j: int, gd: PrimeInterval) -> bool:
    """Neither interval can be separated from the other."""
    return not can_separate(R, i, ab, j, gd) and not can_separate(R, j, gd, i, ab)


_ZETAS: dict = {}


def quasi_centralizer(A: FiniteAlgebra, alpha: Congruence, beta: Congruence) -> Congruence:
    """zeta(alpha, beta), decided one parameter slot at a time.

    For a < b the orbit of (E | E) together with (a.. | b..) and the
    constants records (f(E, a, c), f(E, b, c)) over all terms f and
    parameters c, where E lists the elements met by pairs in beta - alpha.
    The pair is cut when some row collapses those pairs into alpha on one
    side only.
    """
    if not alpha.leq(beta):
        raise ValueError("quasi_centralizer needs alpha <= beta")
    key = (A.key, alpha.rep, beta.rep)
    cached = _ZETAS.get(key)
    if cached is not None:
        return Congruence(A, cached)
    pairs = _outside_pairs(alpha, beta)
    n = A.size
    if not pairs:
        rep = (0,) * n
        _ZETAS[key] = rep
        return Congruence(A, rep)
    elems = sorted({x for p in pairs for x in p})
    pos = {e: i for i, e in enumerate(elems)}
    s = len(elems)
    local = [(pos[a], pos[b]) for a, b in pairs]
    rep = np.array(alpha.rep)
    labels = list(range(n))

    def find(x):
        while labels[x] != x:
            x = labels[x]
        return x

    related = np.zeros((n, n), dtype=bool)
    for a in range(n):
        related[a, a] = True
    for a, b in itertools.combinations(range(n), 2):
        gens = [tuple(elems) * 2, (a,) * s + (b,) * s] + [(c,) * (2 * s) for c in range(n)]
        rows = closure([A] * (2 * s), gens).rows
        lhs = np.ones(len(rows), dtype=bool)
        rhs = np.ones(len(rows), dtype=bool)
        for x, y in local:
            lhs &= rep[rows[:, x]] == rep[rows[:, y]]
            rhs &= rep[rows[:, s + x]] == rep[rows[:, s + y]]
        if not (lhs != rhs).any():
            related[a, b] = related[b, a] = True
    out = canonical([int(np.flatnonzero(related[a])[0]) for a in range(n)])
    zeta = Congruence(A, out)
    # the pairwise relation must already be an equivalence and a congruence
    if not all(related[a, b] == (out[a] == out[b]) for a in range(n) for b in range(n)):
        raise InternalInconsistency(f"zeta relation on {A.id} is not transitive")
    try:
        verify_congruence(zeta)
    except NotACongruence as exc:
        raise InternalInconsistency(f"zeta on {A.id} is not a congruence: {exc}") from exc
    _ZETAS[key] = out
    return zeta


def check_aligned(R: TupleSet, alpha1: Congruence, alpha2: Congruence) -> bool:
    return aligned_violation(R, alpha1, alpha2) is None


def aligned_violation(R: TupleSet, alpha1: Congruence, alpha2: Congruence):
    """First ((a,c),(b,d)) in R breaking (a,b) in alpha1 <=> (c,d) in alpha2."""
    rows = np.array(R.sorted(), dtype=np.int64).reshape(len(R), 2)
    if not len(rows):
        return None
    r1 = np.array(alpha1.rep)[rows[:, 0]]
    r2 = np.array(alpha2.rep)[rows[:, 1]]
    left = r1[:, None] == r1[None, :]
    right = r2[:, None] == r2[None, :]
    bad = np.argwhere(left != right)
    if bad.size:
        p, q = bad[0]
        return tuple(int(x) for x in rows[p]), tuple(int(x) for x in rows[q])
    return None


@dataclass
class CouplingSet:
    v: object
    interval: PrimeInterval
    members: dict = field(default_factory=dict)

    def __contains__(self, w):
        return w in self.members

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)


def binary_relation(P: Instance, v, w) -> TupleSet:
    return TupleSet((P.algebra(v), P.algebra(w)), P.binary(v, w))


def compute_W(P: Instance, v, interval: PrimeInterval) -> CouplingSet:
    """Variables w with some prime interval of A_w two-way inseparable from
    ``interval`` in R^{vw}; the first such interval in lattice order is kept."""
    W = CouplingSet(v, interval, {v: interval})
    for w in P.variables:
        if w == v:
            continue
        R = binary_relation(P, v, w)
        for gd in con_lattice(P.algebra(w)).prime_intervals():
            if inseparable(R, 0, interval, 1, gd):
                W.members[w] = gd
                break
    return W


def centralizer_blocks(P: Instance, W, zeta: Mapping) -> list[dict]:
    """Allowed sets, one dict per zeta-block of the first member of ``W``.

    Each member's block is matched through its binary relation with the
    root; relations are checked for alignment first. Blocks that meet an
    empty set are kept so callers can see the full split.
    """
    members = [w for w in P.variables if w in W]
    for v, w in itertools.combinations(members, 2):
        R = binary_relation(P, v, w)
        bad = aligned_violation(R, zeta[v], zeta[w])
        if bad is not None:
            raise NotAligned(f"R^{{{v},{w}}} is not aligned: {bad}", witness=(v, w, bad))
    if not members:
        return []
    root = members[0]
    out = []
    for block in zeta[root].blocks():
        block_set = set(block) & P.allowed(root)
        if not block_set:
            continue
        allowed = {root: block_set}
        for w in members[1:]:
            image = {c for a, c in P.binary(root, w) if a in block_set}
            allowed[w] = set(zeta[w].block_of(min(image))) if image else set()
        out.append(allowed)
    return out


def decompose_by_centralizer(P: Instance, W, zeta: Mapping) -> list[Instance]:
    """Split P_W by matching zeta-blocks through the binary relations.

    ``W`` is a CouplingSet or any ordered collection of variables. Sub-
    instances with an empty domain or relation are dropped.
    """
    members = [w for w in P.variables if w in W]
    PW = restrict_instance(P, members)
    if not members:
        return [PW]
    out = []
    for allowed in centralizer_blocks(PW, members, zeta):
        sub = PW.restrict_domains(allowed)
        if not sub.has_empty():
            out.append(sub)
    return out
