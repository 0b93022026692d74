"""Subpower closure with derivation tracing, and replayable term witnesses."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .algebra import FiniteAlgebra, TupleSet, check_signatures
from .config import tuple_budget
from .errors import ArityMismatch, BudgetExceeded, ElementOutOfRange

CHUNK = 1 << 16


@dataclass(frozen=True)
class TermWitness:
    """A term as a derivation DAG.

    ``steps`` holds ``("var", i)`` or ``("apply", op_name, child_step_indices)``;
    children always precede their parent.
    """

    arity: int
    steps: tuple
    root: int

    def evaluate(self, algebra: FiniteAlgebra, args: Sequence[int]) -> int:
        if len(args) != self.arity:
            raise ArityMismatch(f"term of arity {self.arity} got {len(args)} arguments")
        values = []
        for step in self.steps:
            if step[0] == "var":
                values.append(int(args[step[1]]))
            else:
                table = algebra.op(step[1]).table
                values.append(int(table[tuple(values[c] for c in step[2])]))
        return values[self.root]

    def table(self, algebra: FiniteAlgebra) -> np.ndarray:
        """The term operation as an ``(n,)*arity`` table."""
        n = algebra.size
        grids = np.indices((n,) * self.arity) if self.arity else []
        values = []
        for step in self.steps:
            if step[0] == "var":
                values.append(grids[step[1]])
            else:
                table = algebra.op(step[1]).table
                values.append(table[tuple(values[c] for c in step[2])])
        return values[self.root]

    def apply_rows(self, components: Sequence[FiniteAlgebra], rows: Sequence[Sequence[int]]) -> tuple:
        """Apply coordinatewise to ``arity`` tuples over ``components``."""
        out = []
        for c, comp in enumerate(components):
            out.append(self.evaluate(comp, [r[c] for r in rows]))
        return tuple(out)

    def to_sexpr(self) -> str:
        memo: dict[int, str] = {}
        for i, step in enumerate(self.steps):
            if step[0] == "var":
                memo[i] = f"x{step[1]}"
            else:
                memo[i] = "(" + " ".join([step[1]] + [memo[c] for c in step[2]]) + ")"
        return memo[self.root]

    __str__ = to_sexpr

    @classmethod
    def from_sexpr(cls, text: str, arity: int | None = None) -> "TermWitness":
        tokens = re.findall(r"\(|\)|[^\s()]+", text)
        steps: list = []
        index: dict = {}

        def intern(step):
            if step not in index:
                index[step] = len(steps)
                steps.append(step)
            return index[step]

        pos = 0

        def parse():
            nonlocal pos
            tok = tokens[pos]
            pos += 1
            if tok == "(":
                name = tokens[pos]
                pos += 1
                children = []
                while tokens[pos] != ")":
                    children.append(parse())
                pos += 1
                return intern(("apply", name, tuple(children)))
            m = re.fullmatch(r"x(\d+)", tok)
            if not m:
                raise ValueError(f"bad token {tok!r} in term {text!r}")
            return intern(("var", int(m.group(1))))

        root = parse()
        if pos != len(tokens):
            raise ValueError(f"trailing tokens in term {text!r}")
        used = [s[1] for s in steps if s[0] == "var"]
        if arity is None:
            arity = max(used) + 1 if used else 0
        return cls(arity, tuple(steps), root)

    @classmethod
    def projection(cls, arity: int, i: int) -> "TermWitness":
        return cls(arity, (("var", i),), 0)


class Closure:
    """Result of a traced closure run: rows in discovery order plus provenance."""

    def __init__(self, components, rows, parents, n_generators, found=None):
        self.components = tuple(components)
        self.rows = rows
        self.parents = parents
        self.n_generators = n_generators
        self.found = found

    def __len__(self):
        return len(self.rows)

    def tuples(self) -> TupleSet:
        return TupleSet(self.components, frozenset(map(tuple, self.rows.tolist())))

    def witness(self, index: int) -> TermWitness:
        steps: list = []
        memo: dict[int, int] = {}
        stack = [index]
        while stack:
            i = stack[-1]
            if i in memo:
                stack.pop()
                continue
            parent = self.parents[i]
            if parent is None:
                memo[i] = len(steps)
                steps.append(("var", i))
                stack.pop()
                continue
            op_name, args = parent
            pending = [a for a in args if a not in memo]
            if pending:
                stack.extend(pending)
                continue
            memo[i] = len(steps)
            steps.append(("apply", op_name, tuple(memo[a] for a in args)))
            stack.pop()
        return TermWitness(self.n_generators, tuple(steps), memo[index])


def _key_fn(sizes):
    radix = 1
    mult = []
    for s in reversed(sizes):
        mult.append(radix)
        radix *= max(int(s), 1)
    mult = mult[::-1]
    if radix < 2**62:
        mult = np.array(mult, dtype=np.int64)
        return lambda rows: rows.astype(np.int64) @ mult
    width = len(sizes)

    def void_keys(rows):
        rows = np.ascontiguousarray(rows, dtype=np.uint8)
        return rows.view(np.dtype((np.void, width))).ravel()

    return void_keys


def closure(
    components: Sequence[FiniteAlgebra],
    generators,
    budget: int | None = None,
    stop: Callable[[np.ndarray], np.ndarray] | None = None,
) -> Closure:
    """Close ``generators`` under the coordinatewise basic operations.

    Semi-naive FIFO evaluation: in each round, every argument combination
    using at least one row from the newest batch is evaluated once, with the
    first such position scanning the batch, earlier positions the older rows
    and later positions everything. ``stop`` receives freshly added rows and
    returns a boolean mask; the first hit ends the search and is stored in
    ``Closure.found``.
    """
    components = list(components)
    check_signatures(components)
    m = len(components)
    budget = tuple_budget() if budget is None else budget
    gens = [tuple(int(x) for x in g) for g in generators]
    sizes = [c.size for c in components]
    for g in gens:
        if len(g) != m:
            raise ArityMismatch(f"generator {g} does not have arity {m}")
        for x, s in zip(g, sizes):
            if not 0 <= x < s:
                raise ElementOutOfRange(f"generator {g} leaves its component")
    if not gens:
        raise ValueError("closure needs at least one generator")
    dtype = np.int16
    keys = _key_fn(sizes)

    # columns grouped by algebra so each group is one fancy-index per op
    groups: dict = {}
    for c, comp in enumerate(components):
        groups.setdefault(comp.key, (comp, []))[1].append(c)
    groups = [(comp, np.array(cols)) for comp, cols in groups.values()]
    signature = components[0].signature if components else ()

    rows = np.array(gens, dtype=dtype).reshape(len(gens), m)
    gen_keys = keys(rows)
    _, first = np.unique(gen_keys, return_index=True)
    first = np.sort(first)
    n_generators = len(gens)
    # duplicates among generators keep their own variable index
    parents: list = [None] * len(gens)
    seen = np.sort(gen_keys[first])
    if stop is not None:
        hit = np.flatnonzero(stop(rows))
        if hit.size:
            return Closure(components, rows, parents, n_generators, int(hit[0]))
    if m == 0 or not signature:
        return Closure(components, rows, parents, n_generators)

    store = [rows]
    total = len(rows)
    done = 0
    all_rows = rows
    while done < total:
        end = total
        for op_index, (op_name, arity) in enumerate(signature):
            tables = [(comp.operations[op_index].table, cols) for comp, cols in groups]
            for p in range(arity):
                dims = [done] * p + [end - done] + [end] * (arity - p - 1)
                count = int(np.prod(dims, dtype=np.int64))
                if count == 0:
                    continue
                for start in range(0, count, CHUNK):
                    flat = np.arange(start, min(start + CHUNK, count), dtype=np.int64)
                    idx = list(np.unravel_index(flat, dims))
                    idx[p] = idx[p] + done
                    out = np.empty((len(flat), m), dtype=dtype)
                    for table, cols in tables:
                        args = tuple(all_rows[i][:, cols] for i in idx)
                        out[:, cols] = table[args]
                    k = keys(out)
                    _, pos = np.unique(k, return_index=True)
                    pos = np.sort(pos)
                    k = k[pos]
                    where = np.searchsorted(seen, k)
                    where[where >= len(seen)] = 0
                    fresh = seen[where] != k if len(seen) else np.ones(len(k), bool)
                    if not fresh.any():
                        continue
                    pos = pos[fresh]
                    new_rows = out[pos]
                    for q in pos:
                        parents.append((op_name, tuple(int(i[q]) for i in idx)))
                    seen = np.sort(np.concatenate([seen, k[fresh]]))
                    store.append(new_rows)
                    all_rows = np.concatenate([all_rows, new_rows])
                    base = total
                    total += len(new_rows)
                    if total > budget:
                        raise BudgetExceeded(f"closure exceeded tuple budget {budget}")
                    if stop is not None:
                        hit = np.flatnonzero(stop(new_rows))
                        if hit.size:
                            return Closure(components, all_rows, parents, n_generators, base + int(hit[0]))
        done = end
    return Closure(components, all_rows, parents, n_generators)


def sg_generate(components: Sequence[FiniteAlgebra], generators, budget: int | None = None) -> TupleSet:
    """Least closed relation over ``components`` containing ``generators``."""
    return closure(components, generators, budget=budget).tuples()


def sg_elements(algebra: FiniteAlgebra, elements) -> frozenset:
    """Subuniverse of a single algebra generated by ``elements``."""
    elements = sorted(set(int(e) for e in elements))
    return frozenset(t[0] for t in sg_generate([algebra], [(e,) for e in elements]).tuples)

