"""Hypothesis strategies for small idempotent algebras and closed relations."""

import itertools

from hypothesis import strategies as st

from csplab.algebra import FiniteAlgebra
from csplab.closure import sg_generate
from csplab.instance import Constraint, Domain, Instance


@st.composite
def idempotent_algebras(draw, min_size=2, max_size=3, max_arity=3):
    n = draw(st.integers(min_size, max_size))
    n_ops = draw(st.integers(1, 2))
    tables = {}
    for k in range(n_ops):
        arity = draw(st.integers(2, max_arity))
        flat = []
        for args in itertools.product(range(n), repeat=arity):
            if all(a == args[0] for a in args):
                flat.append(args[0])
            else:
                flat.append(draw(st.integers(0, n - 1)))
        tables[f"f{k}"] = (arity, flat)
    return FiniteAlgebra.from_tables("rand", n, tables)


@st.composite
def closed_instances(draw, algebra, max_vars=5, max_constraints=6):
    """Random instance over ``algebra`` whose relations are generated subpowers."""
    n = algebra.size
    n_vars = draw(st.integers(1, max_vars))
    variables = tuple(f"x{i}" for i in range(n_vars))
    cons = []
    for _ in range(draw(st.integers(0, max_constraints))):
        arity = draw(st.integers(1, min(3, n_vars)))
        scope = tuple(draw(st.permutations(variables))[:arity])
        gens = draw(st.lists(st.tuples(*[st.integers(0, n - 1)] * arity), min_size=1, max_size=3))
        cons.append(Constraint(scope, sg_generate([algebra] * arity, gens).tuples))
    return Instance(variables, {v: Domain.full(algebra) for v in variables}, tuple(cons))
