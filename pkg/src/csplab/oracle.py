"""Ground truth: brute-force solving, random instances and a small language corpus."""

from __future__ import annotations

import itertools
import random
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .algebra import FiniteAlgebra, TupleSet
from .closure import sg_generate
from .config import DEFAULT_ORACLE_BUDGET
from .errors import BudgetExceeded
from .instance import Constraint, Domain, Instance
from . import library


@dataclass
class OracleResult:
    sat: bool
    assignment: dict | None = None
    solutions: list | None = None
    nodes: int = 0

    @property
    def verdict(self):
        return "Sat" if self.sat else "Unsat"


def brute_force_solve(P: Instance, enumerate_all: bool = False, budget: int = DEFAULT_ORACLE_BUDGET) -> OracleResult:
    """Backtracking with forward checking; variables and values in fixed order."""
    if P.falsum:
        return OracleResult(False, solutions=[] if enumerate_all else None)
    space = 1
    for v in P.variables:
        space *= max(len(P.allowed(v)), 1)
    if space > budget:
        raise BudgetExceeded(f"search space {space} exceeds oracle budget {budget}")
    variables = list(P.variables)
    if any(not P.allowed(v) for v in variables):
        return OracleResult(False, solutions=[] if enumerate_all else None)
    cons = [(c.scope, [t for t in c.tuples]) for c in P.constraints]
    if any(not t for _, t in cons):
        return OracleResult(False, solutions=[] if enumerate_all else None)
    watch = {v: [i for i, (s, _) in enumerate(cons) if v in s] for v in variables}
    solutions = []
    nodes = 0

    def search(depth, domains, live):
        nonlocal nodes
        if depth == len(variables):
            solutions.append({v: next(iter(domains[v])) for v in variables})
            return not enumerate_all
        v = variables[depth]
        for a in sorted(domains[v]):
            nodes += 1
            doms = dict(domains)
            doms[v] = {a}
            new_live = dict(live)
            ok = True
            for i in watch[v]:
                scope, _ = cons[i]
                kept = [t for t in new_live[i] if all(t[j] in doms[u] for j, u in enumerate(scope))]
                if not kept:
                    ok = False
                    break
                new_live[i] = kept
                for j, u in enumerate(scope):
                    vals = {t[j] for t in kept}
                    if not doms[u] <= vals:
                        doms[u] = doms[u] & vals
                        if not doms[u]:
                            ok = False
                            break
                if not ok:
                    break
            if ok and search(depth + 1, doms, new_live):
                return True
        return False

    search(0, {v: set(P.allowed(v)) for v in variables}, {i: t for i, (_, t) in enumerate(cons)})
    if enumerate_all:
        return OracleResult(bool(solutions), solutions[0] if solutions else None, solutions, nodes)
    return OracleResult(bool(solutions), solutions[0] if solutions else None, None, nodes)


def all_solutions(P: Instance) -> set:
    """Solutions as a set of value tuples in ``P.variables`` order."""
    res = brute_force_solve(P, enumerate_all=True)
    return {tuple(s[v] for v in P.variables) for s in res.solutions}


def gen_random_instance(
    algebra: FiniteAlgebra,
    n_vars: int,
    n_constraints: int,
    max_arity: int = 3,
    seed: int = 0,
    max_generators: int = 3,
) -> Instance:
    """Random scopes carrying random subpowers Sg(random tuples)."""
    rng = random.Random(seed)
    variables = tuple(f"x{i}" for i in range(n_vars))
    doms = {v: Domain.full(algebra) for v in variables}
    cons = []
    for _ in range(n_constraints):
        arity = rng.randint(min(2, n_vars, max_arity), min(max_arity, n_vars))
        scope = tuple(rng.sample(variables, arity))
        n_gen = rng.randint(1, max_generators)
        gens = {tuple(rng.randrange(algebra.size) for _ in range(arity)) for _ in range(n_gen)}
        rel = sg_generate([algebra] * arity, sorted(gens))
        cons.append(Constraint(scope, rel.tuples))
    return Instance(variables, doms, tuple(cons))


@dataclass
class Language:
    name: str
    algebra: FiniteAlgebra
    relations: list
    expected: str

    def check_closed(self) -> bool:
        return all(TupleSet((self.algebra,) * len(next(iter(r))), r).is_closed() for r in self.relations)

    def instance(self, n_vars: int, n_constraints: int, seed: int) -> Instance:
        rng = random.Random(seed)
        variables = tuple(f"x{i}" for i in range(n_vars))
        cons = []
        for _ in range(n_constraints):
            rel = rng.choice(self.relations)
            arity = len(next(iter(rel)))
            cons.append(Constraint(tuple(rng.sample(variables, arity)), rel))
        return Instance(variables, {v: Domain.full(self.algebra) for v in variables}, tuple(cons))


def _rel(fn, arity, size=2):
    return frozenset(t for t in itertools.product(range(size), repeat=arity) if fn(*t))


def corpus() -> list[Language]:
    """Classical languages with a polymorphism algebra that preserves them."""
    boolean_binary = [frozenset(s) for r in range(1, 5) for s in itertools.combinations(
        list(itertools.product(range(2), repeat=2)), r)]
    return [
        Language("2-coloring", library.a2maj(), [_rel(lambda x, y: x != y, 2)], "tractable"),
        Language(
            "horn",
            library.a2semi(),
            [_rel(lambda x, y, z: not (x and y) or z, 3), _rel(lambda x: x == 0, 1), _rel(lambda x: x == 1, 1)],
            "tractable",
        ),
        Language(
            "dual-horn",
            library.a2join(),
            [_rel(lambda x, y, z: x or y or not z, 3), _rel(lambda x: x == 0, 1), _rel(lambda x: x == 1, 1)],
            "tractable",
        ),
        Language("2sat", library.a2maj(), boolean_binary, "tractable"),
        Language(
            "lin-z2",
            library.a2aff(),
            [_rel(lambda x, y, z: (x + y + z) % 2 == 0, 3), _rel(lambda x, y, z: (x + y + z) % 2 == 1, 3)],
            "tractable",
        ),
        Language(
            "lin-z3",
            library.z3aff(),
            [_rel(lambda x, y, z, c=c: (x + y + z) % 3 == c, 3, 3) for c in range(3)]
            + [_rel(lambda x, y, c=c: (x - y) % 3 == c, 2, 3) for c in range(3)],
            "tractable",
        ),
        Language("1-in-3", library.a2proj(), [_rel(lambda x, y, z: x + y + z == 1, 3)], "np-complete"),
    ]


@dataclass
class DiffReport:
    total: int = 0
    sat: int = 0
    disagreements: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    times: list = field(default_factory=list)
    per_algebra: dict = field(default_factory=dict)

    @property
    def ok(self):
        return not self.disagreements and not self.errors

    def percentiles(self):
        if not self.times:
            return {}
        arr = np.array(self.times)
        return {f"p{q}": float(np.percentile(arr, q)) for q in (50, 90, 99, 100)}

    def to_json(self):
        return {
            "total": self.total,
            "sat": self.sat,
            "disagreements": self.disagreements,
            "errors": self.errors,
            "timing_seconds": self.percentiles(),
            "per_algebra": self.per_algebra,
        }


def instance_params(rng: random.Random, max_vars: int = 8):
    n_vars = rng.randint(2, max_vars)
    n_cons = rng.randint(1, 2 * n_vars)
    return n_vars, n_cons


def differential_run(
    algebras: Sequence[FiniteAlgebra],
    n: int,
    seed: int,
    solve: Callable[[Instance], object],
    max_vars: int = 8,
    max_arity: int = 3,
) -> DiffReport:
    """Compare ``solve`` against the oracle on ``n`` random instances per algebra."""
    report = DiffReport()
    for A in algebras:
        rng = random.Random(f"{seed}:{A.id}")
        stats = {"total": 0, "sat": 0}
        for i in range(n):
            n_vars, n_cons = instance_params(rng, max_vars)
            P = gen_random_instance(A, n_vars, n_cons, max_arity, seed=rng.randrange(2**31))
            truth = brute_force_solve(P).sat
            t0 = time.perf_counter()
            try:
                out = solve(P)
            except Exception as exc:  # recorded, counted as failure
                report.errors.append({"algebra": A.id, "index": i, "error": repr(exc)})
                continue
            report.times.append(time.perf_counter() - t0)
            got = bool(getattr(out, "sat", out))
            assignment = getattr(out, "assignment", None)
            if got != truth or (got and assignment is not None and not P.check(assignment)):
                report.disagreements.append({"algebra": A.id, "index": i, "oracle": truth, "solver": got})
            report.total += 1
            report.sat += truth
            stats["total"] += 1
            stats["sat"] += truth
        report.per_algebra[A.id] = stats
    return report
