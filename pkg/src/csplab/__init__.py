"""Finite idempotent algebras, their congruences and a nonuniform CSP solver."""

from .algebra import FiniteAlgebra, TupleSet, load_algebra
from .congruence import Congruence, con_lattice, monolith
from .instance import Constraint, Domain, Instance, load_instance
from .solver import SolveOutcome, solve_csp

__all__ = [
    "FiniteAlgebra",
    "TupleSet",
    "load_algebra",
    "Congruence",
    "con_lattice",
    "monolith",
    "Constraint",
    "Domain",
    "Instance",
    "load_instance",
    "SolveOutcome",
    "solve_csp",
]

__version__ = "0.1.0"
