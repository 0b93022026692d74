import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csplab import library
from csplab.algebra import FiniteAlgebra, TupleSet
from csplab.centralizer import (
    can_separate,
    centralizer_blocks,
    check_aligned,
    compute_W,
    decompose_by_centralizer,
    inseparable,
    quasi_centralizer,
)
from csplab.closure import sg_generate
from csplab.congruence import PrimeInterval, con_lattice, from_blocks, one, verify_congruence, zero
from csplab.consistency import enforce_23_minimality
from csplab.errors import NotAligned
from csplab.instance import Constraint, Domain, Instance, restrict_instance

import oracles

# zeta over every comparable pair of mixed4 and p4, computed once with
# oracles.naive_zeta (about two minutes for mixed4) and frozen here
MIXED4_ZETA = {
    ((0, 1, 2, 3), (0, 1, 2, 3)): (0, 0, 0, 0),
    ((0, 1, 2, 3), (0, 1, 1, 1)): (0, 1, 1, 1),
    ((0, 1, 2, 3), (0, 0, 0, 0)): (0, 1, 2, 3),
    ((0, 1, 1, 1), (0, 1, 1, 1)): (0, 0, 0, 0),
    ((0, 1, 1, 1), (0, 0, 0, 0)): (0, 1, 1, 1),
    ((0, 0, 0, 0), (0, 0, 0, 0)): (0, 0, 0, 0),
}
P4_ZETA = {
    ((0, 1, 2, 3), (0, 0, 2, 3)): (0, 0, 0, 0),
    ((0, 1, 2, 3), (0, 0, 2, 2)): (0, 0, 0, 0),
    ((0, 1, 2, 3), (0, 1, 0, 1)): (0, 0, 2, 2),
    ((0, 1, 2, 3), (0, 0, 0, 0)): (0, 0, 2, 2),
    ((0, 0, 2, 3), (0, 0, 2, 2)): (0, 0, 2, 2),
    ((0, 0, 2, 3), (0, 0, 0, 0)): (0, 0, 2, 2),
    ((0, 0, 2, 2), (0, 0, 0, 0)): (0, 0, 2, 2),
    ((0, 1, 0, 1), (0, 0, 0, 0)): (0, 0, 0, 0),
}


def interval(A, lower, upper):
    return PrimeInterval(lower, upper)


def full(A, B=None):
    B = B or A
    return TupleSet((A, B), {(a, b) for a in range(A.size) for b in range(B.size)})


def semi3():
    """The two-element semilattice in the signature of Z3aff."""
    return FiniteAlgebra.from_functions("semi3", 2, {"m": (3, lambda x, y, z: x & y & z)})


def test_interval_against_itself_is_not_separable():
    for name in ("a2semi", "z3aff", "mixed4"):
        A = library.builtin(name)
        R = TupleSet((A, A), {(a, a) for a in range(A.size)})
        for iv in con_lattice(A).prime_intervals():
            assert not can_separate(R, 0, iv, 0, iv)


def test_equality_on_z3aff_is_inseparable():
    Z = library.z3aff()
    R = TupleSet((Z, Z), {(a, a) for a in range(3)})
    iv = interval(Z, zero(Z), one(Z))
    assert not can_separate(R, 0, iv, 1, iv)
    assert inseparable(R, 0, iv, 1, iv)


def test_full_semilattice_square_separates():
    S = library.a2semi()
    iv = interval(S, zero(S), one(S))
    res = can_separate(full(S), 0, iv, 1, iv)
    assert res.separable
    # x -> x meet (1, 0): identity on side 1, constant on side 2
    assert res.witness == (0, 1, 0, 0)


def test_separation_witness_replays():
    A = library.mixed4()
    R = sg_generate([A, A], [(0, 1), (1, 2), (2, 0)])
    L = con_lattice(A)
    for ab, gd in itertools.product(L.prime_intervals(), repeat=2):
        res = can_separate(R, 0, ab, 1, gd)
        if res:
            f, g = res.witness[:4], res.witness[4:]
            assert any(ab.upper.related(x, y) and not ab.lower.related(f[x], f[y]) for x in range(4) for y in range(4))
            assert all(gd.lower.related(g[x], g[y]) for x in range(4) for y in range(4) if gd.upper.related(x, y))


def test_zeta_examples():
    Z = library.z3aff()
    assert quasi_centralizer(Z, zero(Z), zero(Z)).is_one()
    assert quasi_centralizer(Z, zero(Z), one(Z)).is_one()
    S = library.a2semi()
    assert quasi_centralizer(S, zero(S), one(S)).is_zero()
    with pytest.raises(ValueError):
        quasi_centralizer(S, one(S), zero(S))


@pytest.mark.parametrize("name, table", [("mixed4", MIXED4_ZETA), ("p4", P4_ZETA)])
def test_zeta_frozen_values(name, table):
    A = library.builtin(name)
    L = con_lattice(A)
    for (lo, hi), z in table.items():
        alpha = L.congruences[L.index[lo]]
        beta = L.congruences[L.index[hi]]
        assert quasi_centralizer(A, alpha, beta).rep == z


@pytest.mark.parametrize("name", ["a2semi", "a2join", "a2maj", "a2aff", "a2proj", "z3aff", "trivial"])
def test_zeta_matches_oracle(name):
    A = library.builtin(name)
    L = con_lattice(A)
    for alpha, beta in itertools.product(L, repeat=2):
        if alpha.leq(beta):
            got = quasi_centralizer(A, alpha, beta)
            assert got.rep == oracles.naive_zeta(A, alpha.rep, beta.rep)


def test_alignment_examples():
    Z = library.z3aff()
    graph = TupleSet((Z, Z), {(a, (a + 1) % 3) for a in range(3)})
    assert check_aligned(graph, zero(Z), zero(Z))
    S = library.a2semi()
    assert check_aligned(full(S), one(S), one(S))
    assert not check_aligned(full(S), zero(S), zero(S))


def eq_instance(A, names, extra=()):
    doms = {v: Domain.full(A) for v in names}
    cons = [Constraint((a, b), {(x, x) for x in range(A.size)}) for a, b in zip(names, names[1:])]
    return Instance(tuple(names), doms, tuple(cons) + tuple(extra))


def test_compute_W_examples():
    Z = library.z3aff()
    iv = con_lattice(Z).prime_intervals()[0]
    single = Instance(("v",), {"v": Domain.full(Z)}, ())
    assert list(compute_W(single, "v", iv)) == ["v"]
    P = eq_instance(Z, ["a", "b", "c"])
    assert set(compute_W(P, "a", iv)) == {"a", "b", "c"}
    T = semi3()
    mixed = Instance(
        ("v", "w"),
        {"v": Domain.full(Z), "w": Domain.full(T)},
        (Constraint(("v", "w"), {(a, b) for a in range(3) for b in range(2)}),),
    )
    assert list(compute_W(mixed, "v", iv)) == ["v"]


def test_decompose_with_full_zeta_is_one_piece():
    Z = library.z3aff()
    P = eq_instance(Z, ["a", "b"])
    parts = decompose_by_centralizer(P, ["a", "b"], {"a": one(Z), "b": one(Z)})
    assert len(parts) == 1 and parts[0] == restrict_instance(P, ["a", "b"])


def test_decompose_with_zero_zeta_gives_singletons():
    Z = library.z3aff()
    shift = Constraint(("b", "c"), {(a, (a + 1) % 3) for a in range(3)})
    P = eq_instance(Z, ["a", "b"], [shift])
    P = Instance(("a", "b", "c"), {v: Domain.full(Z) for v in "abc"}, P.constraints)
    P = enforce_23_minimality(P)[0]
    parts = decompose_by_centralizer(P, ["a", "b", "c"], {v: zero(Z) for v in "abc"})
    assert len(parts) == 3
    assert [{v: sorted(q.allowed(v)) for v in "abc"} for q in parts] == [
        {"a": [0], "b": [0], "c": [1]},
        {"a": [1], "b": [1], "c": [2]},
        {"a": [2], "b": [2], "c": [0]},
    ]


def test_decompose_product_instance_by_kernel():
    Z2 = library.z3aff2()
    ker = from_blocks(Z2, [[0, 3, 6], [1, 4, 7], [2, 5, 8]])
    # (x, y) -> (x + 1, y) keeps the second coordinate
    shift = {(a, 3 * ((a // 3 + 1) % 3) + a % 3) for a in range(9)}
    same_y = {(a, b) for a in range(9) for b in range(9) if a % 3 == b % 3}
    P = Instance(
        ("p", "q", "r"),
        {v: Domain.full(Z2) for v in "pqr"},
        (Constraint(("p", "q"), shift), Constraint(("q", "r"), same_y)),
    )
    assert len(oracles.solutions(P)) == 27
    P = enforce_23_minimality(P)[0]
    zeta = {v: ker for v in "pqr"}
    parts = decompose_by_centralizer(P, ["p", "q", "r"], zeta)
    assert len(parts) == 3
    union = set().union(*(oracles.solutions(q) for q in parts))
    assert union == oracles.solutions(P)


def test_unaligned_relation_is_reported():
    S = library.a2semi()
    P = Instance(("a", "b"), {v: Domain.full(S) for v in "ab"}, (Constraint(("a", "b"), full(S).tuples),))
    with pytest.raises(NotAligned):
        centralizer_blocks(P, ["a", "b"], {"a": zero(S), "b": zero(S)})


@pytest.mark.parametrize("name", ["a2semi", "a2aff", "z3aff", "mixed4", "p4"])
def test_zeta_is_congruence_and_reflexive_law(name):
    A = library.builtin(name)
    L = con_lattice(A)
    for alpha, beta in itertools.product(L, repeat=2):
        if alpha.leq(beta):
            verify_congruence(quasi_centralizer(A, alpha, beta))
        if alpha == beta:
            assert quasi_centralizer(A, alpha, beta).is_one()


@settings(max_examples=25)
@given(st.sampled_from(["a2semi", "a2maj", "a2aff", "z3aff"]), st.data())
def test_cannot_separate_is_reflexive_and_transitive(name, data):
    A = library.builtin(name)
    n = A.size
    gens = data.draw(st.lists(st.tuples(*[st.integers(0, n - 1)] * 3), min_size=1, max_size=3))
    R = sg_generate([A] * 3, gens)
    ivs = [(i, iv) for i in range(3) for iv in con_lattice(A).prime_intervals()]
    for i, iv in ivs:
        assert not can_separate(R, i, iv, i, iv)
    sep = {(x, y): bool(can_separate(R, x[0], x[1], y[0], y[1])) for x, y in itertools.product(ivs, repeat=2)}
    for x, y, z in itertools.product(ivs, repeat=3):
        if not sep[x, y] and not sep[y, z]:
            assert not sep[x, z]
