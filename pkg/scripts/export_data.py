"""Write the sample algebras and instances under data/."""

import argparse
import itertools
import json
from pathlib import Path

from csplab import library
from csplab.algebra import dump_algebra
from csplab.instance import Constraint, Domain, Instance, dump_instance


def tri2col():
    A = library.a2maj()
    neq = frozenset({(0, 1), (1, 0)})
    vs = ("a", "b", "c")
    cons = [Constraint(p, neq) for p in itertools.combinations(vs, 2)]
    return Instance(vs, {v: Domain.full(A) for v in vs}, tuple(cons))


def path2col():
    A = library.a2maj()
    neq = frozenset({(0, 1), (1, 0)})
    vs = ("a", "b", "c")
    return Instance(vs, {v: Domain.full(A) for v in vs}, (Constraint(("a", "b"), neq), Constraint(("b", "c"), neq)))


def z3_system(rhs):
    """x-y=0, y-z=0, x-z=rhs, written as ternary relations over (x, y, z)."""
    A = library.z3aff()
    vs = ("x", "y", "z")
    rows = [(x, y, z) for x, y, z in itertools.product(range(3), repeat=3)]
    eqs = [
        frozenset(t for t in rows if (t[0] - t[1]) % 3 == 0),
        frozenset(t for t in rows if (t[1] - t[2]) % 3 == 0),
        frozenset(t for t in rows if (t[0] - t[2]) % 3 == rhs),
    ]
    return Instance(vs, {v: Domain.full(A) for v in vs}, tuple(Constraint(vs, r) for r in eqs))


def mixed4_gadget():
    """An inconsistent Z3 system where every constraint also admits all zeros."""
    A = library.mixed4()
    T = (1, 2, 3)

    def coset(c):
        return frozenset(t for t in itertools.product(T, repeat=3) if sum(x - 1 for x in t) % 3 == c) | {(0, 0, 0)}

    eq = frozenset({(0, 0)} | {(t, t) for t in T})
    vs = ("x0", "x1", "x2", "x3")
    cons = (
        Constraint(("x0", "x1", "x2"), coset(0)),
        Constraint(("x0", "x1", "x3"), coset(1)),
        Constraint(("x2", "x3"), eq),
    )
    return Instance(vs, {v: Domain.full(A) for v in vs}, cons)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data"))
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in ("a2semi", "a2join", "a2maj", "a2aff", "a2proj", "z3aff", "mixed4"):
        dump_algebra(library.builtin(name), out / f"{name}.json")
    dump_instance(tri2col(), out / "tri2col.json")
    dump_instance(path2col(), out / "path2col.json")
    dump_instance(z3_system(0), out / "z3_consistent.json")
    dump_instance(z3_system(1), out / "z3_inconsistent.json")
    dump_instance(mixed4_gadget(), out / "mixed4_gadget.json")
    print(f"wrote {len(list(out.glob('*.json')))} files to {out}")


if __name__ == "__main__":
    main()
