"""The SolveCSP pipeline: normalization, block-minimality, flagging and retraction.

Every step either removes tuples that no solution uses or replaces the
instance by an equisatisfiable smaller one, so Unsat answers rest only on
sound local reasoning plus recursive answers. Sat answers are checked
against the input before they are returned.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .closure import sg_elements
from .centralizer import CouplingSet, centralizer_blocks, compute_W, quasi_centralizer
from .config import SolverConfig
from .congruence import con_lattice, is_si, monolith, zero
from .consistency import enforce_1_minimality, enforce_23_minimality
from .errors import (
    InconsistentRetraction,
    InternalInconsistency,
    NotFound,
    RecursionBudgetExceeded,
    UnsupportedMode,
)
from .instance import Constraint, Domain, Instance, compact, lift_assignment, normalize_SI, quotient_instance, restrict_instance
from .oracle import brute_force_solve
from .terms import find_dot_operation, is_semilattice_free


@dataclass(frozen=True)
class Sat:
    assignment: dict

    def __str__(self):
        return "Sat"


@dataclass(frozen=True)
class Unsat:
    def __str__(self):
        return "Unsat"


@dataclass
class SolveOutcome:
    verdict: Sat | Unsat
    trace: list = field(default_factory=list)

    @property
    def sat(self) -> bool:
        return isinstance(self.verdict, Sat)

    @property
    def assignment(self):
        return self.verdict.assignment if self.sat else None

    def to_json(self):
        out = {"verdict": str(self.verdict)}
        if self.sat:
            out["assignment"] = {str(v): int(x) for v, x in self.verdict.assignment.items()}
        return out


@dataclass
class SolveContext:
    sizeP: int
    MAX: frozenset
    Center: frozenset
    muStar: dict
    monolith: dict
    dot: dict
    recursionDepth: int = 0
    counters: dict = field(default_factory=dict)


# ---------------------------------------------------------------- helpers

def _free(A) -> bool:
    return A.size <= 1 or is_semilattice_free(A)


def instance_size(P: Instance) -> int:
    """size(P) over the compacted domains: largest non-semilattice-free one, 0 if none."""
    C, _ = compact(P)
    return max((C.algebra(v).size for v in C.variables if not _free(C.algebra(v))), default=0)


def _all_free(P: Instance) -> bool:
    return all(_free(P.algebra(v)) for v in P.variables)


def _identity(assignment):
    return dict(assignment)


def _then(first: Callable, second: Callable) -> Callable:
    """Lift through ``first`` and then ``second``."""
    return lambda a: second(first(a))


def normalize(P: Instance):
    """Compact, subdirectly irreducible and (2,3)-minimal form of P.

    Returns ``(Q, lift)`` with ``lift`` mapping solutions of Q to solutions
    of P, or None when propagation refutes P.
    """
    lift = _identity
    cur = P
    while True:
        Q = enforce_1_minimality(cur)
        if Q is None:
            return None
        C, back = compact(Q)
        rw = normalize_SI(C)
        res = enforce_23_minimality(rw.instance)
        if res is None:
            return None
        T = res[0]
        lift = _then(_then(rw.lift, lambda a, back=back: lift_assignment(a, back)), lift)
        if T.is_compact and all(is_si(T.algebra(v)) for v in T.variables):
            return T, lift
        cur = T


def compute_context(P: Instance) -> SolveContext:
    """size, MAX, Center, mu* and dot terms for an instance over SI domains."""
    mus = {}
    for v in P.variables:
        A = P.algebra(v)
        ok, mu = monolith(A)
        if not ok:
            raise ValueError(f"domain of {v!r} ({A.id}) is not subdirectly irreducible")
        mus[v] = mu
    free = {v: _free(P.algebra(v)) for v in P.variables}
    sizeP = max((P.algebra(v).size for v in P.variables if not free[v]), default=0)
    MAX = frozenset(v for v in P.variables if not free[v] and P.algebra(v).size == sizeP)
    center = frozenset(
        v for v in P.variables
        if quasi_centralizer(P.algebra(v), zero(P.algebra(v)), mus[v]).is_one()
    )
    mu_star = {v: mus[v] if v in MAX and v in center else zero(P.algebra(v)) for v in P.variables}
    dots = {}
    for v in P.variables:
        A = P.algebra(v)
        if A.key not in dots:
            try:
                dots[A.key] = find_dot_operation(A)
            except NotFound:
                # only a retraction needs it; that step reports the gap
                dots[A.key] = None
    return SolveContext(sizeP, MAX, center, mu_star, mus, dots)


def semilattice_free_solve(P: Instance, mode: str = "brute", budget: int | None = None) -> SolveOutcome:
    """Stand-in for the few subpowers algorithm: plain backtracking.

    Only correctness is promised here, not polynomial running time.
    """
    if mode == "external":
        raise UnsupportedMode("no external few-subpowers solver is configured")
    if mode != "brute":
        raise UnsupportedMode(f"unknown semilattice-free mode {mode!r}")
    C, back = compact(P) if not P.falsum else (P, None)
    if not P.falsum and not _all_free(C):
        raise ValueError("semilattice_free_solve needs semilattice-free domains")
    kwargs = {} if budget is None else {"budget": budget}
    res = brute_force_solve(C, **kwargs)
    trace = [{"event": "semilattice-free", "variables": len(P.variables), "nodes": res.nodes}]
    if not res.sat:
        return SolveOutcome(Unsat(), trace)
    assignment = lift_assignment(res.assignment, back)
    if not P.check(assignment):
        raise InternalInconsistency("backtracking returned a non-solution")
    return SolveOutcome(Sat(assignment), trace)


# ------------------------------------------------------------- retraction

def _power_until_idempotent(maps: Mapping) -> dict:
    """Raise every map to the least common power k making all of them idempotent."""
    arrays = {v: np.asarray(m, dtype=np.int64) for v, m in maps.items()}
    cur = dict(arrays)
    for _ in range(1, 1 + 64):
        if all(np.array_equal(m[m], m) for m in cur.values()):
            return {v: tuple(int(x) for x in m) for v, m in cur.items()}
        cur = {v: arrays[v][m] for v, m in cur.items()}
    raise InconsistentRetraction("no idempotent power found within 64 steps")


def retraction_maps(P: Instance, ctx: SolveContext, phi: Mapping) -> dict:
    """p_v = q_v^k with q_v(a) = a . b_v and b_v the least element of phi(v)."""
    Pq, nats = quotient_instance(P, ctx.muStar)
    if not Pq.check(phi):
        raise InconsistentRetraction("phi is not a solution of the mu*-quotient")
    maps = {}
    for v in P.variables:
        A = P.algebra(v)
        block = sorted(a for a in P.allowed(v) if nats[v][a] == phi[v])
        b = block[0]
        if ctx.dot.get(A.key) is None:
            raise InconsistentRetraction(f"no dot operation for {A.id}")
        table = ctx.dot[A.key].table(A)
        q = table[:, b]
        for c in block[1:]:
            if not all(table[a, c] == q[a] for a in P.allowed(v)):
                raise InconsistentRetraction(f"a.b depends on the choice of b in phi({v!r})")
        maps[v] = tuple(int(x) for x in q)
    return _power_until_idempotent(maps)


def apply_retraction(P: Instance, maps: Mapping) -> Instance:
    """p(P): domains and relations replaced by their images, after checking consistency."""
    cons = []
    for c in P.constraints:
        ms = [maps[v] for v in c.scope]
        image = frozenset(tuple(m[x] for m, x in zip(ms, t)) for t in c.tuples)
        if not image <= c.tuples:
            bad = next(iter(image - c.tuples))
            raise InconsistentRetraction(f"constraint on {c.scope} not closed under p: {bad}")
        cons.append(Constraint(c.scope, image))
    doms = {
        v: Domain(P.algebra(v), frozenset(maps[v][a] for a in P.allowed(v))) for v in P.variables
    }
    for v in P.variables:
        if not doms[v].allowed <= P.allowed(v):
            raise InconsistentRetraction(f"p_{v} leaves the domain")
    return Instance(P.variables, doms, tuple(cons), P.falsum)


def maroti_retraction(P: Instance, ctx: SolveContext, phi: Mapping) -> Instance:
    """Retract P along phi, a solution of P/mu* (values are quotient indices)."""
    return apply_retraction(P, retraction_maps(P, ctx, phi))


# ------------------------------------------------------------------ solver

class _Solver:
    def __init__(self, config: SolverConfig, max_depth: int):
        self.config = config
        self.max_depth = max_depth
        self.trace: list = []
        self.memo: dict = {}
        self.bm_memo: dict = {}
        self.calls = 0

    def event(self, kind, depth, **data):
        self.trace.append({"event": kind, "depth": depth, **data})

    # semilattice-free fast path
    def _free_solve(self, P, depth):
        out = semilattice_free_solve(P, self.config.fallback, self.config.oracle_budget)
        self.event("semilattice-free", depth, variables=len(P.variables), sat=out.sat)
        return out.sat, out.assignment

    def solve(self, P: Instance, depth: int):
        """(sat, assignment) for P; the assignment is in P's coordinates."""
        if depth > self.max_depth:
            raise RecursionBudgetExceeded(f"recursion depth {depth} exceeds {self.max_depth}")
        key = P.fingerprint
        if key in self.memo:
            return self.memo[key]
        self.calls += 1
        out = self._solve(P, depth)
        if out[0] and not P.check(out[1]):
            raise InternalInconsistency("solver produced an assignment that fails the instance")
        self.memo[key] = out
        return out

    def _solve(self, P: Instance, depth: int):
        if P.has_empty():
            self.event("empty", depth)
            return False, None
        if not P.variables:
            return True, {}
        Q1 = enforce_1_minimality(P)
        if Q1 is None:
            self.event("refuted", depth, by="1-minimality")
            return False, None
        C, back = compact(Q1)
        to_p = lambda a, back=back: lift_assignment(a, back)
        if _all_free(C):
            ok, a = self._free_solve(C, depth)
            return ok, (to_p(a) if ok else None)
        cur = C
        while True:
            norm = normalize(cur)
            if norm is None:
                self.event("refuted", depth, by="(2,3)-minimality")
                return False, None
            Q, lift = norm
            to_p = _then(lift, to_p)
            if _all_free(Q):
                ok, a = self._free_solve(Q, depth)
                return ok, (to_p(a) if ok else None)
            ctx = compute_context(Q)
            ctx.recursionDepth = depth
            B = self.block_minimal(Q, ctx, depth)
            if B is None:
                self.event("refuted", depth, by="block-minimality")
                return False, None
            if B != Q:
                cur = B
                continue
            self.event("normalized", depth, variables=len(Q.variables), size=ctx.sizeP,
                       max=len(ctx.MAX), center=len(ctx.Center & ctx.MAX))
            Pstar, nats = quotient_instance(Q, ctx.muStar)
            flags = {}
            for v in Q.variables:
                for a in sorted(Pstar.allowed(v)):
                    ok, _ = self.decide(Pstar.pin(v, a), ctx.sizeP, depth)
                    if not ok:
                        flags.setdefault(v, set()).add(a)
            if flags:
                for v, bad in flags.items():
                    keep = Pstar.allowed(v) - bad
                    if keep and sg_elements(Pstar.algebra(v), keep) != keep:
                        raise InternalInconsistency(f"unflagged values of {v!r} are not a subuniverse")
                self.event("flagged", depth, values=sum(len(b) for b in flags.values()))
                cur = Q.restrict_domains({
                    v: {x for x in Q.allowed(v) if nats[v][x] not in flags[v]} for v in flags
                })
                continue
            return self._finish(Q, Pstar, ctx, depth, to_p)

    def _finish(self, Q, Pstar, ctx, depth, to_p):
        if all(m.is_zero() for m in ctx.muStar.values()):
            phi = self.find_solution(Pstar, ctx.sizeP, depth)
            self.event("solution", depth, via="self-reduction")
            return True, to_p(phi)
        maps = self.good_retraction(Q, Pstar, ctx, depth)
        R = apply_retraction(Q, maps)
        new_size = instance_size(R)
        if new_size >= ctx.sizeP:
            raise InternalInconsistency(f"retraction did not shrink the instance ({new_size} >= {ctx.sizeP})")
        self.event("retraction", depth, size=new_size)
        ok, a = self.solve(R, depth + 1)
        return ok, (to_p(a) if ok else None)

    def good_retraction(self, Q, Pstar, ctx, depth):
        """Compose p^phi over the variables whose mu*-quotient has semilattice edges."""
        n_of = {v: Q.algebra(v).size for v in Q.variables}
        total = {v: tuple(range(n_of[v])) for v in Q.variables}
        targets = [v for v in Q.variables if not _free(Pstar.algebra(v))]
        for v in targets:
            if len(set(total[v])) < n_of[v]:
                continue
            A = Q.algebra(v)
            if ctx.dot.get(A.key) is None:
                raise InconsistentRetraction(f"no dot operation for {A.id}")
            table = ctx.dot[A.key].table(A)
            nat = quotient_instance(Q, {v: ctx.muStar[v]})[1][v]
            chosen = None
            for c in sorted(Pstar.allowed(v)):
                b = min(a for a in Q.allowed(v) if nat[a] == c)
                if len(set(int(x) for x in table[:, b])) < A.size:
                    chosen = c
                    break
            if chosen is None:
                raise InternalInconsistency(f"no shrinking dot translation for {v!r}")
            phi = self.find_solution(Pstar.pin(v, chosen), ctx.sizeP, depth)
            maps = retraction_maps(Q, ctx, phi)
            total = {w: tuple(maps[w][x] for x in total[w]) for w in Q.variables}
        return _power_until_idempotent(total)

    def decide(self, P: Instance, sizeP: int, depth: int):
        """Decide one pinned instance: (has a solution, assignment or None).

        Recurses once the size drops and otherwise tightens to block-minimality;
        a block-minimal pinned instance counts as solvable.
        """
        to_p = _identity
        cur = P
        while True:
            norm = normalize(cur)
            if norm is None:
                return False, None
            R, lift = norm
            to_p = _then(lift, to_p)
            if _all_free(R):
                ok, a = self._free_solve(R, depth)
                return ok, (to_p(a) if ok else None)
            ctx = compute_context(R)
            if ctx.sizeP < sizeP:
                ok, a = self.solve(R, depth + 1)
                return ok, (to_p(a) if ok else None)
            B = self.block_minimal(R, ctx, depth)
            if B is None:
                return False, None
            if B == R:
                if ctx.MAX & ctx.Center:
                    raise InternalInconsistency("pinned quotient still has central MAX variables")
                return True, None
            cur = B

    def find_solution(self, P: Instance, sizeP: int, depth: int) -> dict:
        """Self-reduction: pin variables one by one, keeping a value the decision procedure accepts."""
        cur = P
        for v in P.variables:
            for a in sorted(cur.allowed(v)):
                ok, found = self.decide(cur.pin(v, a), sizeP, depth)
                if ok and found is not None:
                    if not P.check(found):
                        raise InternalInconsistency("recursive solution fails the pinned instance")
                    return found
                if ok:
                    cur = cur.pin(v, a)
                    break
            else:
                raise InternalInconsistency(f"no value of {v!r} extends although the instance was accepted")
        phi = {v: next(iter(cur.allowed(v))) for v in P.variables}
        if not P.check(phi):
            raise InternalInconsistency("self-reduction ended on a non-solution")
        return phi

    # block-minimality
    def sub_sat(self, sub: Instance, sizeP: int, depth: int, where: str) -> bool:
        if sub.has_empty():
            return False
        s = instance_size(sub)
        if s == 0:
            # semilattice-free leaves never recurse
            return self._free_solve(sub, depth)[0]
        if s >= sizeP:
            if self.config.strict:
                raise InternalInconsistency(f"{where}: subproblem of size {s} is not smaller than {sizeP}")
            self.event("not-smaller", depth, where=where, size=s)
            return brute_force_solve(sub, budget=self.config.oracle_budget).sat
        return self.solve(sub, depth + 1)[0]

    def block_minimal(self, P: Instance, ctx: SolveContext, depth: int):
        key = P.fingerprint
        if key in self.bm_memo:
            return self.bm_memo[key]
        out = self._block_minimal(P, ctx, depth)
        self.bm_memo[key] = out
        return out

    def _block_minimal(self, P: Instance, ctx: SolveContext, depth: int):
        Q = P
        while True:
            triples = [
                (v, pi) for v in Q.variables for pi in con_lattice(Q.algebra(v)).prime_intervals()
            ]
            info = []
            for v, pi in triples:
                W = compute_W(Q, v, pi)
                zetas = {w: quasi_centralizer(Q.algebra(w), gd.lower, gd.upper) for w, gd in W.members.items()}
                central = zetas[v].is_one()
                info.append((v, pi, W, zetas, central))
            noncentral = [t for t in info if not t[4]]
            cache = {}
            cons = []
            changed = False
            for c in Q.constraints:
                keep = set(c.tuples)
                for v, pi, W, zetas, central in info:
                    tests = []
                    if not central:
                        tests.append(("bm1", None, [x for x in c.scope if x in W]))
                    else:
                        tests.append(("bm1c", None, [x for x in c.scope if x in W]))
                        for u in noncentral:
                            tests.append(("bm2", u, [x for x in c.scope if x in W and x in u[2]]))
                    for kind, u, pinned in tests:
                        if not pinned and kind == "bm1":
                            continue
                        pos = [c.scope.index(x) for x in pinned]
                        groups = {}
                        for t in keep:
                            groups.setdefault(tuple(t[i] for i in pos), []).append(t)
                        for vals, ts in groups.items():
                            ck = (kind, v, pi.lower.rep, pi.upper.rep,
                                  None if u is None else (u[0], u[1].lower.rep, u[1].upper.rep),
                                  tuple(zip(pinned, vals)),
                                  frozenset(c.scope) if kind == "bm1c" else None)
                            if ck not in cache:
                                cache[ck] = self._bm_check(Q, ctx, kind, W, zetas, u, c.scope, dict(zip(pinned, vals)), depth)
                            if not cache[ck]:
                                keep.difference_update(ts)
                if len(keep) != len(c.tuples):
                    changed = True
                    if not keep:
                        return None
                    cons.append(Constraint(c.scope, frozenset(keep)))
                else:
                    cons.append(c)
            if not changed:
                return Q
            self.event("block-minimality", depth, removed=sum(len(a.tuples) - len(b.tuples)
                                                              for a, b in zip(Q.constraints, cons)))
            Q = enforce_1_minimality(Q.replace(constraints=cons))
            if Q is None:
                return None

    def _bm_check(self, Q, ctx, kind, W: CouplingSet, zetas, u, scope, pins, depth) -> bool:
        PW = restrict_instance(Q, [w for w in Q.variables if w in W])
        pinned = PW.restrict_domains({x: {a} for x, a in pins.items()})
        if pinned.has_empty():
            return False
        if kind == "bm1":
            subs = [pinned.restrict_domains(al) for al in centralizer_blocks(pinned, W, zetas)]
            return any(self.sub_sat(s, ctx.sizeP, depth, "BM1") for s in subs)
        if kind == "bm1c":
            Y = {x: ctx.monolith[x] for x in pinned.variables if x in ctx.MAX and x not in scope}
            sub, _ = quotient_instance(pinned, Y)
            return self.sub_sat(sub, ctx.sizeP, depth, "BM1 central")
        # bm2: decompose the overlap with u's coupling set, quotient the rest of MAX
        U = [x for x in pinned.variables if x in u[2]]
        Y = {x: ctx.monolith[x] for x in pinned.variables if x in ctx.MAX and x not in U}
        if not U:
            sub, _ = quotient_instance(pinned, Y)
            return self.sub_sat(sub, ctx.sizeP, depth, "BM2")
        zu = {x: u[3][x] for x in U}
        for al in centralizer_blocks(restrict_instance(pinned, U), U, zu):
            part = pinned.restrict_domains(al)
            if part.has_empty():
                continue
            sub, _ = quotient_instance(part, Y)
            if self.sub_sat(sub, ctx.sizeP, depth, "BM2"):
                return True
        return False


def _depth_cap(P: Instance, config: SolverConfig) -> int:
    if config.max_depth is not None:
        return config.max_depth
    return max((P.algebra(v).size for v in P.variables), default=0) + 2


def establish_block_minimality(P: Instance, ctx: SolveContext | None = None, recurse=None,
                               config: SolverConfig | None = None):
    """Block-minimal tightening of an SI, (2,3)-minimal instance; None when a relation empties.

    ``recurse`` is unused by default (subproblems go to the built-in solver);
    pass a callable ``Instance -> bool`` to decide the smaller subproblems
    another way, for instance with the oracle.
    """
    config = config or SolverConfig()
    ctx = ctx or compute_context(P)
    solver = _Solver(config, _depth_cap(P, config))
    if recurse is not None:
        def solve(Q, depth):
            out = recurse(Q)
            return bool(getattr(out, "sat", out)), None

        solver.solve = solve
    return solver.block_minimal(P, ctx, 0)


def solve_csp(P: Instance, config: SolverConfig | None = None) -> SolveOutcome:
    config = config or SolverConfig()
    solver = _Solver(config, _depth_cap(P, config))
    ok, assignment = solver.solve(P, 0)
    if ok:
        if not P.check(assignment):
            raise InternalInconsistency("final assignment fails the input instance")
        return SolveOutcome(Sat(assignment), solver.trace)
    return SolveOutcome(Unsat(), solver.trace)
