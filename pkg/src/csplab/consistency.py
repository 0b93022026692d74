"""Propagation: 1-minimality, (k,k+1)-minimality and global minimality."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .instance import Constraint, Domain, Instance


def enforce_1_minimality(P: Instance) -> Instance | None:
    """Shrink domains to the unary projections of their constraints; None if empty."""
    if P.falsum:
        return None
    allowed = {v: set(P.allowed(v)) for v in P.variables}
    tuples = [set(c.tuples) for c in P.constraints]
    changed = True
    while changed:
        changed = False
        for i, c in enumerate(P.constraints):
            sets = [allowed[v] for v in c.scope]
            kept = {t for t in tuples[i] if all(x in s for x, s in zip(t, sets))}
            if len(kept) != len(tuples[i]):
                tuples[i] = kept
                changed = True
            if not kept:
                return None
            for pos, v in enumerate(c.scope):
                proj = {t[pos] for t in kept}
                if not allowed[v] <= proj:
                    allowed[v] &= proj
                    changed = True
                    if not allowed[v]:
                        return None
    if any(not s for s in allowed.values()):
        return None
    doms = {v: Domain(P.algebra(v), frozenset(allowed[v])) for v in P.variables}
    cons = [
        c if len(tuples[i]) == len(c.tuples) else Constraint(c.scope, frozenset(tuples[i]))
        for i, c in enumerate(P.constraints)
    ]
    Q = P.replace(domains=doms, constraints=cons)
    return P if Q == P else Q


@dataclass
class Strategy:
    """Relations R^X for the k-element variable sets X (tuples in variable order)."""

    k: int
    relations: dict

    def __getitem__(self, X):
        return self.relations[tuple(X)]

    def compatible(self, scope, t) -> bool:
        pos = {v: i for i, v in enumerate(scope)}
        for X, rel in self.relations.items():
            if all(v in pos for v in X) and tuple(t[pos[v]] for v in X) not in rel:
                return False
        return True


class _Engine:
    def __init__(self, P: Instance, k: int):
        self.P = P
        self.order = {v: i for i, v in enumerate(P.variables)}
        self.k = min(k, len(P.variables))
        self.sizes = {v: P.algebra(v).size for v in P.variables}
        self.sets = [tuple(X) for X in itertools.combinations(P.variables, self.k)]
        self.rel = {}
        for X in self.sets:
            arr = np.ones([self.sizes[v] for v in X], dtype=bool)
            for axis, v in enumerate(X):
                mask = np.zeros(self.sizes[v], dtype=bool)
                mask[list(P.allowed(v))] = True
                shape = [1] * len(X)
                shape[axis] = -1
                arr &= mask.reshape(shape)
            self.rel[X] = arr
        self.cons = [(c.scope, set(c.tuples)) for c in P.constraints]
        self.by_set = {}
        for X in self.sets:
            self.by_set[frozenset(X)] = X

    def _proj_mask(self, scope, tuples, X):
        """Boolean array over X marking tuples whose projection onto scope∩X is in pr(tuples)."""
        inter = [v for v in X if v in scope]
        if not inter:
            return None
        pos = [scope.index(v) for v in inter]
        mask = np.zeros([self.sizes[v] for v in inter], dtype=bool)
        if tuples:
            idx = np.array([[t[p] for p in pos] for t in tuples], dtype=np.int64)
            mask[tuple(idx.T)] = True
        shape = [self.sizes[v] if v in scope else 1 for v in X]
        return mask.reshape(shape)

    def _apply_constraints(self):
        changed = False
        for scope, tuples in self.cons:
            for X in self.sets:
                m = self._proj_mask(scope, tuples, X)
                if m is None:
                    continue
                new = self.rel[X] & m
                if not np.array_equal(new, self.rel[X]):
                    self.rel[X] = new
                    changed = True
        return changed

    def _extend(self):
        """Drop tuples of R^X without an extension to some further variable."""
        changed = False
        k = self.k
        for X in self.sets:
            for w in self.P.variables:
                if w in X:
                    continue
                Z = tuple(sorted(X + (w,), key=self.order.__getitem__))
                acc = None
                for Y in itertools.combinations(Z, k):
                    if w not in Y:
                        continue
                    arr = self.rel[Y]
                    # broadcast R^Y to the axes of Z
                    shape = [self.sizes[v] if v in Y else 1 for v in Z]
                    arr = arr.reshape(shape)
                    acc = arr if acc is None else acc & arr
                if acc is None:
                    continue
                xs = self.rel[X].reshape([self.sizes[v] if v in X else 1 for v in Z])
                ext = (acc & xs).any(axis=Z.index(w))
                new = self.rel[X] & ext
                if not np.array_equal(new, self.rel[X]):
                    self.rel[X] = new
                    changed = True
        return changed

    def _prune_tuples(self):
        changed = False
        for i, (scope, tuples) in enumerate(self.cons):
            keep = set()
            for t in tuples:
                ok = True
                if len(scope) >= self.k:
                    for Y in itertools.combinations(range(len(scope)), self.k):
                        vars_ = [scope[j] for j in Y]
                        X = self.by_set.get(frozenset(vars_))
                        if X is None:
                            continue
                        if not self.rel[X][tuple(t[scope.index(v)] for v in X)]:
                            ok = False
                            break
                else:
                    for X in self.sets:
                        if all(v in X for v in scope):
                            arr = self.rel[X]
                            axes = tuple(a for a, v in enumerate(X) if v not in scope)
                            sub = arr.any(axis=axes) if axes else arr
                            key = tuple(t[scope.index(v)] for v in X if v in scope)
                            if not sub[key]:
                                ok = False
                            break
                if ok:
                    keep.add(t)
            if len(keep) != len(tuples):
                self.cons[i] = (scope, keep)
                changed = True
        return changed

    def run(self) -> bool:
        self._apply_constraints()
        while True:
            changed = self._extend()
            changed |= self._prune_tuples()
            changed |= self._apply_constraints()
            if any(not arr.any() for arr in self.rel.values()) or any(not t for _, t in self.cons):
                return False
            if not changed:
                return True

    def tuples(self, X) -> frozenset:
        return frozenset(tuple(int(x) for x in idx) for idx in np.argwhere(self.rel[X]))


def enforce_k_minimality(P: Instance, k: int = 2):
    """(k,k+1)-minimality. Returns ``(P', Strategy)`` or None when a relation empties.

    The strategy relations are installed as constraints C^X, replacing any
    constraint whose scope is exactly the set X.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    Q = enforce_1_minimality(P)
    if Q is None:
        return None
    if not Q.variables:
        return Q, Strategy(k, {})
    while True:
        eng = _Engine(Q, k)
        if not eng.run():
            return None
        rels = {X: eng.tuples(X) for X in eng.sets}
        kk = eng.k
        cons = []
        for scope, tuples in eng.cons:
            if len(scope) == kk and frozenset(scope) in eng.by_set:
                continue
            cons.append(Constraint(scope, frozenset(tuples)))
        cons += [Constraint(X, rels[X]) for X in eng.sets]
        R = enforce_1_minimality(Q.replace(constraints=cons))
        if R is None:
            return None
        if R == Q:
            return R, Strategy(kk, rels)
        Q = R


def enforce_23_minimality(P: Instance):
    return enforce_k_minimality(P, 2)


@dataclass(frozen=True)
class Minimal:
    instance: Instance


@dataclass(frozen=True)
class Tightened:
    instance: Instance
    removed: int


def _is_sat(result) -> bool:
    if isinstance(result, bool):
        return result
    return bool(getattr(result, "sat"))


def check_global_minimality(P: Instance, solve: Callable[[Instance], object]):
    """Pin every constraint tuple and keep only those ``solve`` supports."""
    removed = 0
    cons = []
    for c in P.constraints:
        keep = set()
        for t in sorted(c.tuples):
            pinned = P.restrict_domains({v: {x} for v, x in zip(c.scope, t)})
            if not pinned.has_empty() and _is_sat(solve(pinned)):
                keep.add(t)
        removed += len(c.tuples) - len(keep)
        cons.append(c if len(keep) == len(c.tuples) else Constraint(c.scope, frozenset(keep)))
    if removed == 0:
        return Minimal(P)
    return Tightened(P.replace(constraints=cons), removed)
