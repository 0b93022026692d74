import itertools
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csplab import library
from csplab.config import SolverConfig
from csplab.consistency import enforce_23_minimality
from csplab.errors import InconsistentRetraction, RecursionBudgetExceeded, UnsupportedMode
from csplab.instance import Constraint, Domain, Instance, load_instance, quotient_instance
from csplab.oracle import gen_random_instance
from csplab.solver import (
    compute_context,
    establish_block_minimality,
    instance_size,
    maroti_retraction,
    normalize,
    retraction_maps,
    semilattice_free_solve,
    solve_csp,
)

import oracles
from strategies import closed_instances

DATA = Path(__file__).resolve().parent.parent / "data"


def uniform(A, names, cons=()):
    return Instance(tuple(names), {v: Domain.full(A) for v in names}, tuple(cons))


def sat(P):
    return bool(oracles.solutions(P))


def test_context_examples():
    Z = library.z3aff()
    ctx = compute_context(uniform(Z, "xy"))
    assert ctx.sizeP == 0 and not ctx.MAX
    assert ctx.Center == {"x", "y"}
    assert all(m.is_zero() for m in ctx.muStar.values())
    S = library.a2semi()
    ctx = compute_context(uniform(S, "xy"))
    assert ctx.sizeP == 2 and ctx.MAX == {"x", "y"} and not ctx.Center
    assert all(m.is_zero() for m in ctx.muStar.values())
    ctx = compute_context(uniform(library.trivial(), "xy"))
    assert ctx.sizeP == 0 and not ctx.MAX
    M = library.mixed4()
    ctx = compute_context(uniform(M, "x"))
    assert ctx.sizeP == 4 and ctx.MAX == {"x"} and not ctx.Center
    assert ctx.dot[M.key].to_sexpr() == "(aff (aff x0 x1) x1)"
    with pytest.raises(ValueError):
        compute_context(uniform(library.z3aff2(), "x"))


def test_solve_trivial_cases():
    S = library.a2semi()
    out = solve_csp(uniform(S, "xyz"))
    assert out.sat and set(out.assignment) == {"x", "y", "z"}
    contra = uniform(S, "x", [Constraint(("x",), {(0,)}), Constraint(("x",), {(1,)})])
    out = solve_csp(contra)
    assert not out.sat
    assert out.trace[-1]["by"] == "1-minimality"
    assert solve_csp(uniform(S, "")).sat


def test_solve_data_files():
    tri = load_instance(DATA / "tri2col.json", resolve=library.builtin)
    assert not solve_csp(tri).sat
    path = load_instance(DATA / "path2col.json", resolve=library.builtin)
    out = solve_csp(path)
    assert out.sat and path.check(out.assignment)


def test_gadget_exercises_block_minimality():
    P = load_instance(DATA / "mixed4_gadget.json", resolve=library.builtin)
    out = solve_csp(P)
    assert out.sat and set(out.assignment.values()) == {0}
    kinds = {e["event"] for e in out.trace}
    assert "block-minimality" in kinds


def z3_rows(P):
    """Linear rows (coefficients, constant) for relations of the form x + y + z = c."""
    rows = []
    for c in P.constraints:
        (t,) = [t for t in c.tuples][:1]
        rows.append([1 if v in c.scope else 0 for v in P.variables] + [sum(t) % 3])
    return rows


def test_semilattice_free_examples():
    good = load_instance(DATA / "z3_consistent.json", resolve=library.builtin)
    out = semilattice_free_solve(good)
    assert out.sat and good.check(out.assignment)
    bad = load_instance(DATA / "z3_inconsistent.json", resolve=library.builtin)
    assert not semilattice_free_solve(bad).sat
    assert semilattice_free_solve(uniform(library.z3aff(), "")).sat
    with pytest.raises(UnsupportedMode):
        semilattice_free_solve(good, mode="external")
    with pytest.raises(ValueError):
        semilattice_free_solve(uniform(library.a2semi(), "x"))


@settings(max_examples=30)
@given(st.data())
def test_semilattice_free_matches_gaussian_elimination(data):
    Z = library.z3aff()
    n = data.draw(st.integers(2, 5))
    vs = [f"x{i}" for i in range(n)]
    cons = []
    for _ in range(data.draw(st.integers(1, 5))):
        scope = tuple(data.draw(st.permutations(vs))[:3 if n >= 3 else 2])
        rhs = data.draw(st.integers(0, 2))
        rel = {t for t in itertools.product(range(3), repeat=len(scope)) if sum(t) % 3 == rhs}
        cons.append(Constraint(scope, rel))
    P = uniform(Z, vs, cons)
    rows = z3_rows(P)
    assert semilattice_free_solve(P).sat == oracles.gauss_mod3(rows)


def semilattice_instance():
    S = library.a2semi()
    R = {(0, 0), (0, 1), (1, 1)}
    return uniform(S, "xyz", [Constraint(("x", "y"), R), Constraint(("y", "z"), R)])


def test_retraction_examples():
    P = enforce_23_minimality(semilattice_instance())[0]
    ctx = compute_context(P)
    ones = {v: 1 for v in P.variables}
    assert maroti_retraction(P, ctx, ones) == P
    assert retraction_maps(P, ctx, ones) == {v: (0, 1) for v in P.variables}
    zeros = {v: 0 for v in P.variables}
    R = maroti_retraction(P, ctx, zeros)
    assert all(R.allowed(v) == {0} for v in R.variables)
    assert sat(R) == sat(P)
    with pytest.raises(InconsistentRetraction):
        maroti_retraction(P, ctx, {"x": 1, "y": 0, "z": 0})


def test_block_minimality_examples():
    P, _ = normalize(semilattice_instance())
    ctx = compute_context(P)
    assert establish_block_minimality(P, ctx) == P
    S = library.a2semi()
    R = {(0, 0), (0, 1), (1, 1)}
    dead = uniform(S, "xy", [Constraint(("x", "y"), R), Constraint(("y", "x"), R),
                             Constraint(("x",), {(1,)}), Constraint(("y",), {(0,)})])
    assert establish_block_minimality(dead) is None


def test_block_minimality_on_random_z3aff():
    Z = library.z3aff()
    for seed in range(5):
        P = gen_random_instance(Z, 6, 5, seed=seed)
        norm = normalize(P)
        if norm is None:
            assert not sat(P)
            continue
        Q, _ = norm
        B = establish_block_minimality(Q)
        assert oracles.solutions(B) == oracles.solutions(Q)


def test_gadget_block_minimality_removes_tuples():
    P = load_instance(DATA / "mixed4_gadget.json", resolve=library.builtin)
    Q, _ = normalize(P)
    B = establish_block_minimality(Q, recurse=sat)
    assert B != Q
    assert oracles.solutions(B) == oracles.solutions(Q)


def test_recursion_cap():
    P = load_instance(DATA / "mixed4_gadget.json", resolve=library.builtin)
    with pytest.raises(RecursionBudgetExceeded):
        solve_csp(P, SolverConfig(max_depth=-1))


def test_instance_size():
    assert instance_size(uniform(library.z3aff(), "xy")) == 0
    assert instance_size(uniform(library.mixed4(), "x")) == 4
    M = library.mixed4()
    assert instance_size(Instance(("x",), {"x": Domain(M, {1, 2, 3})}, ())) == 0
    assert instance_size(Instance(("x",), {"x": Domain(M, {0, 1})}, ())) == 2


ALGS = st.sampled_from(["a2semi", "a2join", "a2maj", "a2aff", "z3aff", "mixed4", "p4"])


@settings(max_examples=60)
@given(ALGS, st.data())
def test_solver_agrees_with_oracle(name, data):
    A = library.builtin(name)
    P = data.draw(closed_instances(A, max_vars=5, max_constraints=6))
    out = solve_csp(P)
    assert out.sat == sat(P)
    if out.sat:
        assert P.check(out.assignment)


@given(st.sampled_from(["a2semi", "mixed4"]), st.data())
def test_retraction_is_consistent_and_equisatisfiable(name, data):
    A = library.builtin(name)
    P0 = data.draw(closed_instances(A, max_vars=4))
    norm = normalize(P0)
    if norm is None:
        return
    P, _ = norm
    ctx = compute_context(P)
    Pq, _ = quotient_instance(P, ctx.muStar)
    sols = sorted(oracles.solutions(Pq))
    if not sols:
        return
    phi = dict(zip(P.variables, data.draw(st.sampled_from(sols))))
    R = maroti_retraction(P, ctx, phi)
    maps = retraction_maps(P, ctx, phi)
    for c in P.constraints:
        assert {tuple(maps[v][x] for v, x in zip(c.scope, t)) for t in c.tuples} <= c.tuples
    assert sat(R) == sat(P)


def test_zero_mu_star_branch_uses_self_reduction():
    P = semilattice_instance()
    out = solve_csp(P)
    assert out.sat
    assert any(e["event"] == "solution" for e in out.trace)
