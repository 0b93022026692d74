"""Named algebras used throughout the tests, the CLI and the experiments."""

from __future__ import annotations

from .algebra import FiniteAlgebra, product_algebra


def a2semi():
    return FiniteAlgebra.from_functions("a2semi", 2, {"meet": (2, lambda x, y: x & y)})


def a2join():
    return FiniteAlgebra.from_functions("a2join", 2, {"join": (2, lambda x, y: x | y)})


def a2maj():
    return FiniteAlgebra.from_functions("a2maj", 2, {"maj": (3, lambda x, y, z: int(x + y + z >= 2))})


def a2aff():
    return FiniteAlgebra.from_functions("a2aff", 2, {"minority": (3, lambda x, y, z: x ^ y ^ z)})


def a2proj():
    return FiniteAlgebra("a2proj", 2, ())


def z3aff():
    return FiniteAlgebra.from_functions("z3aff", 3, {"m": (3, lambda x, y, z: (x - y + z) % 3)})


def z3aff2():
    """Z3aff squared; element (x, y) is 3*x + y."""
    return product_algebra(z3aff(), z3aff(), "z3aff2")


def trivial():
    return FiniteAlgebra("trivial", 1, ())


def _mixed4_aff(x, y):
    if x == 0:
        return y
    if y == 0:
        return x
    return (2 * (x - 1) + 2 * (y - 1)) % 3 + 1


def mixed4():
    """Four elements: a bottom 0 under a copy {1,2,3} of Z3.

    ``aff`` is 2x+2y on the Z3 part and treats 0 as a neutral element, so
    each {0, b} is a two-element semilattice absorbed by b. Subdirectly
    irreducible with monolith {0 | 1,2,3}; the dot operation is the term
    (aff (aff x0 x1) x1).
    """
    return FiniteAlgebra.from_functions("mixed4", 4, {"aff": (2, _mixed4_aff)})


def p4():
    """A2semi x A2aff with a shared signature: not subdirectly irreducible."""
    semi = FiniteAlgebra.from_functions("s", 2, {"f": (3, lambda x, y, z: x & y & z)})
    aff = FiniteAlgebra.from_functions("a", 2, {"f": (3, lambda x, y, z: x ^ y ^ z)})
    return product_algebra(semi, aff, "p4")


BUILTIN = {
    "a2semi": a2semi,
    "a2join": a2join,
    "a2maj": a2maj,
    "a2aff": a2aff,
    "a2proj": a2proj,
    "z3aff": z3aff,
    "z3aff2": z3aff2,
    "trivial": trivial,
    "mixed4": mixed4,
    "p4": p4,
}


def builtin(name: str) -> FiniteAlgebra:
    try:
        return BUILTIN[name]()
    except KeyError:
        raise KeyError(f"unknown builtin algebra {name!r}; known: {sorted(BUILTIN)}") from None
