"""Finite idempotent algebras, relations over them, and the basic constructions.

Universe elements are dense indices ``0..n-1``. Operation tables are numpy
arrays of shape ``(n,) * arity`` indexed row-major, so ``table[a, b, c]`` is
``f(a, b, c)`` and the flattened JSON form has the last argument fastest.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    ArityMismatch,
    ElementOutOfRange,
    NotACongruence,
    NotClosed,
    NotIdempotent,
    SignatureMismatch,
    UnknownOperation,
)


def _frozen_table(table, size, arity):
    arr = np.asarray(table, dtype=np.int16).reshape((size,) * arity)
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Operation:
    name: str
    arity: int
    table: np.ndarray

    def __call__(self, *args):
        return int(self.table[args])


@dataclass(frozen=True, eq=False)
class FiniteAlgebra:
    """A finite algebra with idempotent basic operations.

    Two algebras compare equal when they have the same size and the same
    named operation tables; ``id`` is only a label.
    """

    id: str
    size: int
    operations: tuple[Operation, ...] = ()
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("algebra size must be at least 1")
        names = [op.name for op in self.operations]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate operation names in {self.id}: {names}")
        for op in self.operations:
            if op.arity < 1:
                raise ArityMismatch(f"operation {op.name} has arity {op.arity}")
            if op.table.shape != (self.size,) * op.arity:
                raise ArityMismatch(f"table of {op.name} has shape {op.table.shape}")
            if self.check:
                if op.table.size and (op.table.min() < 0 or op.table.max() >= self.size):
                    raise ElementOutOfRange(f"table of {op.name} leaves the universe")
                for x in range(self.size):
                    if op.table[(x,) * op.arity] != x:
                        raise NotIdempotent(f"{self.id}: {op.name}({x},...,{x}) != {x}")

    @classmethod
    def from_tables(cls, id: str, size: int, tables: Mapping[str, tuple[int, Sequence[int]]]):
        """Build from ``{name: (arity, flat_table)}``."""
        ops = tuple(
            Operation(name, arity, _frozen_table(flat, size, arity))
            for name, (arity, flat) in tables.items()
        )
        return cls(id, size, ops)

    @classmethod
    def from_functions(cls, id: str, size: int, functions: Mapping[str, tuple[int, Callable[..., int]]]):
        ops = []
        for name, (arity, fn) in functions.items():
            flat = [fn(*args) for args in itertools.product(range(size), repeat=arity)]
            ops.append(Operation(name, arity, _frozen_table(flat, size, arity)))
        return cls(id, size, tuple(ops))

    @cached_property
    def key(self):
        return (self.size,) + tuple((op.name, op.arity, op.table.tobytes()) for op in self.operations)

    @property
    def signature(self):
        return tuple((op.name, op.arity) for op in self.operations)

    @property
    def universe(self):
        return range(self.size)

    def op(self, name: str) -> Operation:
        for op in self.operations:
            if op.name == name:
                return op
        raise UnknownOperation(f"{self.id} has no operation {name!r}")

    def __eq__(self, other):
        return isinstance(other, FiniteAlgebra) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        ops = ", ".join(f"{op.name}/{op.arity}" for op in self.operations)
        return f"FiniteAlgebra({self.id!r}, size={self.size}, ops=[{ops}])"

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "size": self.size,
            "operations": [
                {"name": op.name, "arity": op.arity, "table": [int(x) for x in op.table.ravel()]}
                for op in self.operations
            ],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "FiniteAlgebra":
        size = int(data["size"])
        ops = []
        for entry in data.get("operations", []):
            arity = int(entry["arity"])
            table = list(entry["table"])
            if len(table) != size**arity:
                raise ArityMismatch(f"operation {entry['name']} needs {size**arity} table entries, got {len(table)}")
            if any(not 0 <= x < size for x in table):
                raise ElementOutOfRange(f"table of {entry['name']} leaves the universe")
            ops.append(Operation(entry["name"], arity, _frozen_table(table, size, arity)))
        return cls(str(data["id"]), size, tuple(ops))


def load_algebra(path) -> FiniteAlgebra:
    with open(path) as fh:
        return FiniteAlgebra.from_json(json.load(fh))


def dump_algebra(algebra: FiniteAlgebra, path):
    with open(path, "w") as fh:
        json.dump(algebra.to_json(), fh)


def apply_op(algebra: FiniteAlgebra, op: str, args: Sequence[int]) -> int:
    operation = algebra.op(op)
    if len(args) != operation.arity:
        raise ArityMismatch(f"{op} takes {operation.arity} arguments, got {len(args)}")
    for a in args:
        if not 0 <= a < algebra.size:
            raise ElementOutOfRange(f"element {a} not in universe of size {algebra.size}")
    return int(operation.table[tuple(args)])


def check_signatures(components: Sequence[FiniteAlgebra]):
    if not components:
        return
    sig = components[0].signature
    for comp in components[1:]:
        if comp.signature != sig:
            raise SignatureMismatch(f"{comp.id} has signature {comp.signature}, expected {sig}")


@dataclass(frozen=True, eq=False)
class TupleSet:
    """A relation over ``components`` stored as a frozenset of int tuples."""

    components: tuple[FiniteAlgebra, ...]
    tuples: frozenset

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "tuples", frozenset(tuple(int(x) for x in t) for t in self.tuples))
        m = len(self.components)
        for t in self.tuples:
            if len(t) != m:
                raise ArityMismatch(f"tuple {t} does not have arity {m}")
            for x, comp in zip(t, self.components):
                if not 0 <= x < comp.size:
                    raise ElementOutOfRange(f"tuple {t} leaves component {comp.id}")

    @property
    def arity(self):
        return len(self.components)

    def __len__(self):
        return len(self.tuples)

    def __iter__(self):
        return iter(self.sorted())

    def __contains__(self, t):
        return tuple(t) in self.tuples

    def __eq__(self, other):
        return (
            isinstance(other, TupleSet)
            and self.components == other.components
            and self.tuples == other.tuples
        )

    def __hash__(self):
        return hash(self.tuples)

    def sorted(self):
        return sorted(self.tuples)

    def project(self, positions: Sequence[int]) -> "TupleSet":
        comps = tuple(self.components[i] for i in positions)
        return TupleSet(comps, frozenset(tuple(t[i] for i in positions) for t in self.tuples))

    def is_subdirect(self) -> bool:
        return all(
            {t[i] for t in self.tuples} == set(range(comp.size))
            for i, comp in enumerate(self.components)
        )

    def closure_violation(self):
        """One closure pass; returns ``(op, args)`` leaving the set, or None."""
        check_signatures(self.components)
        if not self.components:
            return None
        rows = self.sorted()
        for op_index, (name, arity) in enumerate(self.components[0].signature):
            tables = [comp.operations[op_index].table for comp in self.components]
            for args in itertools.product(rows, repeat=arity):
                image = tuple(int(tables[i][tuple(a[i] for a in args)]) for i in range(self.arity))
                if image not in self.tuples:
                    return name, args
        return None

    def is_closed(self) -> bool:
        return self.closure_violation() is None


def preserves_partition(algebra: FiniteAlgebra, rep: Sequence[int]):
    """Return None if the partition given by ``rep`` is a congruence, else a witness.

    Checked on basic translations: one argument moves inside a block, the
    others are arbitrary. This is equivalent to compatibility with each
    operation.
    """
    rep = np.asarray(rep)
    n = algebra.size
    members = [np.flatnonzero(rep == r) for r in sorted(set(rep.tolist()))]
    for op in algebra.operations:
        for pos in range(op.arity):
            for block in members:
                if len(block) < 2:
                    continue
                first = np.take(op.table, block[0], axis=pos)
                for other in block[1:]:
                    second = np.take(op.table, other, axis=pos)
                    bad = np.flatnonzero(rep[first.ravel()] != rep[second.ravel()])
                    if bad.size:
                        rest = np.unravel_index(bad[0], (n,) * (op.arity - 1)) if op.arity > 1 else ()
                        rest = [int(x) for x in rest]
                        args_a = rest[:pos] + [int(block[0])] + rest[pos:]
                        args_b = rest[:pos] + [int(other)] + rest[pos:]
                        return op.name, tuple(args_a), tuple(args_b)
    return None


def quotient_algebra(algebra: FiniteAlgebra, theta) -> tuple[FiniteAlgebra, tuple[int, ...]]:
    """Quotient by a congruence, blocks numbered by their least member.

    Returns the quotient and the natural map as a tuple ``element -> block``.
    """
    rep = tuple(theta.rep)
    if len(rep) != algebra.size:
        raise NotACongruence("partition size does not match the algebra")
    witness = preserves_partition(algebra, rep)
    if witness is not None:
        raise NotACongruence(f"operation {witness[0]} breaks blocks at {witness[1]} vs {witness[2]}")
    leaders = sorted(set(rep))
    index = {r: i for i, r in enumerate(leaders)}
    natural = tuple(index[rep[a]] for a in range(algebra.size))
    m = len(leaders)
    ops = []
    for op in algebra.operations:
        lead = np.array(leaders)
        sub = op.table[np.ix_(*([lead] * op.arity))] if op.arity else op.table
        nat = np.array(natural)
        ops.append(Operation(op.name, op.arity, _frozen_table(nat[sub], m, op.arity)))
    quotient = FiniteAlgebra(f"{algebra.id}/~", m, tuple(ops), check=False)
    return quotient, natural


def restrict_algebra(algebra: FiniteAlgebra, subset: Iterable[int]) -> tuple[FiniteAlgebra, tuple[int, ...]]:
    """Subalgebra on ``subset`` with the translation ``new index -> old element``."""
    elems = tuple(sorted(set(int(x) for x in subset)))
    if not elems:
        raise ValueError("cannot restrict to an empty set")
    for x in elems:
        if not 0 <= x < algebra.size:
            raise ElementOutOfRange(f"element {x} not in universe of size {algebra.size}")
    if len(elems) == algebra.size:
        return algebra, elems
    old_to_new = np.full(algebra.size, -1, dtype=np.int16)
    old_to_new[list(elems)] = np.arange(len(elems))
    idx = np.array(elems)
    ops = []
    for op in algebra.operations:
        sub = op.table[np.ix_(*([idx] * op.arity))]
        mapped = old_to_new[sub]
        if (mapped < 0).any():
            pos = tuple(int(i) for i in np.argwhere(mapped < 0)[0])
            args = tuple(elems[i] for i in pos)
            raise NotClosed(
                f"{op.name}{args} = {int(op.table[args])} leaves the subset",
                witness=(op.name, args),
            )
        ops.append(Operation(op.name, op.arity, _frozen_table(mapped, len(elems), op.arity)))
    return FiniteAlgebra(f"{algebra.id}|{len(elems)}", len(elems), tuple(ops), check=False), elems


def product_algebra(first: FiniteAlgebra, second: FiniteAlgebra, id: str | None = None) -> FiniteAlgebra:
    """Direct product; element ``(x, y)`` has index ``x * |second| + y``."""
    check_signatures([first, second])
    n1, n2 = first.size, second.size
    ops = []
    for op1, op2 in zip(first.operations, second.operations):
        k = op1.arity
        flat = []
        for args in itertools.product(range(n1 * n2), repeat=k):
            x = op1.table[tuple(a // n2 for a in args)]
            y = op2.table[tuple(a % n2 for a in args)]
            flat.append(int(x) * n2 + int(y))
        ops.append(Operation(op1.name, k, _frozen_table(flat, n1 * n2, k)))
    return FiniteAlgebra(id or f"{first.id}x{second.id}", n1 * n2, tuple(ops))


def map_algebra(algebra: FiniteAlgebra, mapping: Sequence[int], id: str | None = None) -> tuple[FiniteAlgebra, tuple[int, ...]]:
    """The algebra on the image of an idempotent map ``p`` with operations ``p o f``.

    Returns the new algebra and the translation ``new index -> old element``.
    """
    p = np.asarray(mapping)
    image = tuple(sorted(set(p.tolist())))
    old_to_new = np.full(algebra.size, -1, dtype=np.int16)
    old_to_new[list(image)] = np.arange(len(image))
    idx = np.array(image)
    ops = []
    for op in algebra.operations:
        sub = op.table[np.ix_(*([idx] * op.arity))]
        ops.append(Operation(op.name, op.arity, _frozen_table(old_to_new[p[sub]], len(image), op.arity)))
    return FiniteAlgebra(id or f"p({algebra.id})", len(image), tuple(ops)), image
