"""CSP instances over finite algebras and the transformations the solver uses."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .algebra import FiniteAlgebra, TupleSet, quotient_algebra, restrict_algebra
from .congruence import meet_irreducible_decomposition

Assignment = dict


@dataclass(frozen=True)
class Domain:
    algebra: FiniteAlgebra
    allowed: frozenset

    def __post_init__(self):
        object.__setattr__(self, "allowed", frozenset(int(a) for a in self.allowed))

    @classmethod
    def full(cls, algebra: FiniteAlgebra) -> "Domain":
        return cls(algebra, frozenset(range(algebra.size)))

    @property
    def is_full(self):
        return len(self.allowed) == self.algebra.size


@dataclass(frozen=True)
class Constraint:
    scope: tuple
    tuples: frozenset

    def __post_init__(self):
        object.__setattr__(self, "scope", tuple(self.scope))
        object.__setattr__(self, "tuples", frozenset(tuple(int(x) for x in t) for t in self.tuples))

    @property
    def arity(self):
        return len(self.scope)

    @cached_property
    def array(self) -> np.ndarray:
        return np.array(sorted(self.tuples), dtype=np.int64).reshape(len(self.tuples), self.arity)

    def project(self, variables: Sequence) -> "Constraint":
        pos = [self.scope.index(v) for v in variables]
        return Constraint(tuple(variables), frozenset(tuple(t[i] for i in pos) for t in self.tuples))

    def satisfied(self, assignment: Mapping) -> bool:
        return tuple(assignment[v] for v in self.scope) in self.tuples

    def key(self):
        return (self.scope, tuple(sorted(self.tuples)))


def _dedupe_scope(scope, tuples):
    """Fold repeated scope variables into one position."""
    if len(set(scope)) == len(scope):
        return tuple(scope), tuples
    first = {}
    for i, v in enumerate(scope):
        first.setdefault(v, i)
    keep = sorted(first.values())
    out = set()
    for t in tuples:
        if all(t[i] == t[first[v]] for i, v in enumerate(scope)):
            out.add(tuple(t[i] for i in keep))
    return tuple(scope[i] for i in keep), out


@dataclass(frozen=True, eq=False)
class Instance:
    """Variables, domains and extensional constraints.

    ``falsum`` records a constraint whose scope became empty while its
    relation was empty, so the instance has no solution.
    """

    variables: tuple
    domains: Mapping
    constraints: tuple
    falsum: bool = False

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "domains", dict(self.domains))
        cons = []
        falsum = self.falsum
        for c in self.constraints:
            scope, tuples = _dedupe_scope(c.scope, c.tuples)
            if not scope:
                falsum = falsum or not tuples
                continue
            cons.append(c if scope == c.scope else Constraint(scope, tuples))
        object.__setattr__(self, "constraints", tuple(cons))
        object.__setattr__(self, "falsum", falsum)

    def __len__(self):
        return len(self.variables)

    def algebra(self, v) -> FiniteAlgebra:
        return self.domains[v].algebra

    def allowed(self, v) -> frozenset:
        return self.domains[v].allowed

    @cached_property
    def fingerprint(self):
        doms = tuple((v, self.domains[v].algebra.key, tuple(sorted(self.domains[v].allowed))) for v in self.variables)
        cons = tuple(sorted(c.key() for c in self.constraints))
        return (self.variables, doms, cons, self.falsum)

    def __eq__(self, other):
        return isinstance(other, Instance) and self.fingerprint == other.fingerprint

    def __hash__(self):
        return hash(self.fingerprint)

    @property
    def is_compact(self):
        return all(d.is_full for d in self.domains.values())

    def relation(self, c: Constraint) -> TupleSet:
        return TupleSet(tuple(self.algebra(v) for v in c.scope), c.tuples)

    def check(self, assignment: Mapping) -> bool:
        if self.falsum:
            return False
        for v in self.variables:
            if v not in assignment or assignment[v] not in self.domains[v].allowed:
                return False
        return all(c.satisfied(assignment) for c in self.constraints)

    def replace(self, domains=None, constraints=None, variables=None, falsum=None) -> "Instance":
        return Instance(
            self.variables if variables is None else variables,
            self.domains if domains is None else domains,
            self.constraints if constraints is None else constraints,
            self.falsum if falsum is None else falsum,
        )

    def restrict_domains(self, allowed: Mapping) -> "Instance":
        """Intersect allowed sets and drop constraint tuples leaving them."""
        doms = dict(self.domains)
        for v, vals in allowed.items():
            doms[v] = Domain(doms[v].algebra, doms[v].allowed & frozenset(vals))
        return self.replace(domains=doms).prune()

    def pin(self, v, value) -> "Instance":
        return self.restrict_domains({v: {value}})

    def prune(self) -> "Instance":
        cons = []
        for c in self.constraints:
            sets = [self.domains[v].allowed for v in c.scope]
            kept = frozenset(t for t in c.tuples if all(x in s for x, s in zip(t, sets)))
            cons.append(c if len(kept) == len(c.tuples) else Constraint(c.scope, kept))
        return self.replace(constraints=cons)

    def has_empty(self) -> bool:
        return self.falsum or any(not d.allowed for d in self.domains.values()) or any(
            not c.tuples for c in self.constraints
        )

    def binary(self, v, w) -> frozenset:
        """Pairs allowed for (v, w) by the binary constraints on exactly {v, w}."""
        pairs = None
        for c in self.constraints:
            if set(c.scope) == {v, w} and len(c.scope) == 2:
                rel = c.tuples if c.scope == (v, w) else frozenset((b, a) for a, b in c.tuples)
                pairs = rel if pairs is None else pairs & rel
        if pairs is None:
            pairs = frozenset((a, b) for a in self.allowed(v) for b in self.allowed(w))
        return pairs

    def size(self) -> int:
        return max((d.algebra.size for d in self.domains.values()), default=0)

    def to_json(self) -> dict:
        algebras = {}
        for v in self.variables:
            a = self.domains[v].algebra
            algebras.setdefault(a.key, a)
        ids = {}
        out_algebras = []
        for key, a in algebras.items():
            aid = a.id if a.id not in ids.values() else f"{a.id}#{len(ids)}"
            ids[key] = aid
            data = a.to_json()
            data["id"] = aid
            out_algebras.append(data)
        return {
            "algebras": out_algebras,
            "variables": list(self.variables),
            "domains": {
                v: {"algebra": ids[self.domains[v].algebra.key], "allowed": sorted(self.domains[v].allowed)}
                for v in self.variables
            },
            "constraints": [
                {"scope": list(c.scope), "tuples": [list(t) for t in sorted(c.tuples)]} for c in self.constraints
            ] + ([{"scope": [], "tuples": []}] if self.falsum else []),
        }

    @classmethod
    def from_json(cls, data: Mapping, resolve: Callable[[str], FiniteAlgebra] | None = None) -> "Instance":
        algebras = {}
        for entry in data.get("algebras", []):
            if isinstance(entry, str):
                if resolve is None:
                    raise ValueError(f"cannot resolve algebra reference {entry!r}")
                a = resolve(entry)
                algebras[entry] = a
            else:
                a = FiniteAlgebra.from_json(entry)
                algebras[a.id] = a
        doms = {}
        for v in data["variables"]:
            entry = data["domains"][v]
            name = entry["algebra"]
            if name not in algebras:
                if resolve is None:
                    raise ValueError(f"unknown algebra {name!r}")
                algebras[name] = resolve(name)
            alg = algebras[name]
            allowed = entry.get("allowed", list(range(alg.size)))
            doms[v] = Domain(alg, frozenset(allowed))
        cons = [Constraint(tuple(c["scope"]), frozenset(tuple(t) for t in c["tuples"])) for c in data["constraints"]]
        return cls(tuple(data["variables"]), doms, tuple(cons))


def load_instance(path, resolve=None) -> Instance:
    with open(path) as fh:
        return Instance.from_json(json.load(fh), resolve)


def dump_instance(P: Instance, path):
    with open(path, "w") as fh:
        json.dump(P.to_json(), fh)


def restrict_instance(P: Instance, W: Iterable) -> Instance:
    """P_W: every constraint projected onto its scope inside W."""
    W = set(W)
    variables = tuple(v for v in P.variables if v in W)
    cons = []
    falsum = P.falsum
    for c in P.constraints:
        inside = tuple(v for v in c.scope if v in W)
        if len(inside) == len(c.scope):
            cons.append(c)
        elif inside:
            cons.append(c.project(inside))
        elif not c.tuples:
            falsum = True
    return Instance(variables, {v: P.domains[v] for v in variables}, tuple(cons), falsum)


def quotient_instance(P: Instance, alphas: Mapping) -> tuple[Instance, dict]:
    """P modulo a congruence per variable (variables missing from ``alphas`` keep equality).

    Returns the quotient and ``{v: natural map as a tuple}``.
    """
    doms = {}
    maps = {}
    for v in P.variables:
        A = P.algebra(v)
        theta = alphas.get(v)
        if theta is None or theta.is_zero():
            doms[v] = P.domains[v]
            maps[v] = tuple(range(A.size))
            continue
        Q, nat = quotient_algebra(A, theta)
        doms[v] = Domain(Q, frozenset(nat[a] for a in P.allowed(v)))
        maps[v] = nat
    cons = []
    for c in P.constraints:
        nats = [maps[v] for v in c.scope]
        cons.append(Constraint(c.scope, frozenset(tuple(m[x] for m, x in zip(nats, t)) for t in c.tuples)))
    return Instance(P.variables, doms, tuple(cons), P.falsum), maps


def compact(P: Instance) -> tuple[Instance, dict]:
    """Re-index every domain to its allowed subuniverse.

    Returns the compact instance and ``{v: new index -> old element}``.
    """
    doms = {}
    back = {}
    fwd = {}
    for v in P.variables:
        d = P.domains[v]
        if d.is_full:
            doms[v] = d
            back[v] = tuple(range(d.algebra.size))
        else:
            sub, elems = restrict_algebra(d.algebra, d.allowed)
            doms[v] = Domain.full(sub)
            back[v] = elems
        fwd[v] = {x: i for i, x in enumerate(back[v])}
    cons = []
    for c in P.constraints:
        f = [fwd[v] for v in c.scope]
        tuples = set()
        for t in c.tuples:
            try:
                tuples.add(tuple(m[x] for m, x in zip(f, t)))
            except KeyError:
                continue
        cons.append(Constraint(c.scope, frozenset(tuples)))
    return Instance(P.variables, doms, tuple(cons), P.falsum), back


def lift_assignment(assignment: Mapping, back: Mapping) -> dict:
    return {v: back[v][x] for v, x in assignment.items()}


@dataclass
class SIRewrite:
    instance: Instance
    parts: dict = field(default_factory=dict)
    back: dict = field(default_factory=dict)

    def lift(self, assignment: Mapping) -> dict:
        """Solution of the rewritten instance to a solution of the original."""
        out = {}
        for v, names in self.parts.items():
            key = tuple(assignment[n] for n in names)
            out[v] = self.back[v][key]
        return out


def normalize_SI(P: Instance) -> SIRewrite:
    """Split every non-SI domain into its subdirectly irreducible factors.

    Expects a compact instance (call ``compact`` first). A variable ``v`` with
    decomposition theta_1..theta_m becomes ``v`` (if m == 1) or
    ``v#1..v#m``; each constraint on ``v`` is re-encoded through the natural
    maps, and a linking constraint on ``v#1..v#m`` holds the image of A_v.
    """
    parts = {}
    back = {}
    encode = {}
    doms = {}
    variables = []
    link = []
    for v in P.variables:
        A = P.algebra(v)
        thetas = meet_irreducible_decomposition(A)
        if len(thetas) == 1:
            parts[v] = (v,)
            encode[v] = [(a,) for a in range(A.size)]
            doms[v] = P.domains[v]
            variables.append(v)
        else:
            names = tuple(f"{v}#{i + 1}" for i in range(len(thetas)))
            nats = []
            for name, theta in zip(names, thetas):
                Q, nat = quotient_algebra(A, theta)
                doms[name] = Domain(Q, frozenset(nat[a] for a in P.allowed(v)))
                nats.append(nat)
                variables.append(name)
            parts[v] = names
            encode[v] = [tuple(n[a] for n in nats) for a in range(A.size)]
            link.append(Constraint(names, frozenset(encode[v][a] for a in P.allowed(v))))
        back[v] = {code: a for a, code in enumerate(encode[v])}
    cons = []
    for c in P.constraints:
        scope = tuple(n for v in c.scope for n in parts[v])
        tuples = frozenset(tuple(x for v, a in zip(c.scope, t) for x in encode[v][a]) for t in c.tuples)
        cons.append(Constraint(scope, tuples))
    return SIRewrite(Instance(tuple(variables), doms, tuple(cons + link), P.falsum), parts, back)
