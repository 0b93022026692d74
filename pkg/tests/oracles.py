"""Slow reference implementations straight from the definitions.

Nothing here shares code with the package beyond reading operation tables,
so agreement between the two is meaningful.
"""

from __future__ import annotations

import itertools


def ops(A):
    return [(op.arity, op.table) for op in A.operations]


def naive_sg(components, gens):
    """Least set containing gens and closed under coordinatewise operations.

    Each round only evaluates argument lists that use at least one row found
    in the previous round.
    """
    sig = [ops(A) for A in components]
    n_ops = len(sig[0]) if sig else 0
    S = set(tuple(g) for g in gens)
    fresh = set(S)
    while fresh:
        rows = sorted(S)
        new = set()
        for k in range(n_ops):
            arity = sig[0][k][0]
            for p in range(arity):
                for f in fresh:
                    for rest in itertools.product(rows, repeat=arity - 1):
                        args = rest[:p] + (f,) + rest[p:]
                        t = tuple(int(sig[i][k][1][tuple(a[i] for a in args)]) for i in range(len(components)))
                        if t not in S:
                            new.add(t)
        S |= new
        fresh = new
    return frozenset(S)


def set_partitions(n):
    """All partitions of range(n) as canonical least-representative tuples."""
    out = []

    def rec(i, rep):
        if i == n:
            out.append(tuple(rep))
            return
        for r in sorted(set(rep)):
            rec(i + 1, rep + [r])
        rec(i + 1, rep + [i])

    rec(0, [])
    return out


def preserves(A, rep):
    for arity, table in ops(A):
        for x in itertools.product(range(A.size), repeat=arity):
            for pos in range(arity):
                for y in range(A.size):
                    if rep[y] == rep[x[pos]] and y != x[pos]:
                        z = list(x)
                        z[pos] = y
                        if rep[int(table[x])] != rep[int(table[tuple(z)])]:
                            return False
    return True


def naive_congruences(A):
    return frozenset(r for r in set_partitions(A.size) if preserves(A, r))


def leq(r, s):
    return all(s[a] == s[b] for a in range(len(r)) for b in range(len(r)) if r[a] == r[b])


def naive_cg(A, pairs):
    cands = [r for r in naive_congruences(A) if all(r[a] == r[b] for a, b in pairs)]
    least = [r for r in cands if all(leq(r, s) for s in cands)]
    assert len(least) == 1
    return least[0]


def naive_monolith(A):
    """(is SI, meet of the nontrivial congruences or None)."""
    n = A.size
    nontrivial = [r for r in naive_congruences(A) if len(set(r)) < n]
    if not nontrivial:
        return True, tuple([0] * n)
    meet = tuple(min(b for b in range(n) if all(r[a] == r[b] for r in nontrivial)) for a in range(n))
    if len(set(meet)) < n:
        return True, meet
    return False, None


def polynomial_functions(components, params):
    """Unary polynomials as tuples of functions, one per component.

    Generated by the identity and one constant family per parameter tuple.
    """
    flat = []
    for A in components:
        flat += [A] * A.size
    ident = tuple(x for A in components for x in range(A.size))
    consts = [tuple(r[c] for c, A in enumerate(components) for _ in range(A.size)) for r in params]
    return naive_sg(flat, [ident] + consts)


def naive_orbit(components, R, slots, tracked):
    """{(f_{slot_i}(tracked_i))_i : f a unary polynomial of R}."""
    offsets = list(itertools.accumulate([0] + [A.size for A in components]))
    funcs = polynomial_functions(components, R)
    return frozenset(tuple(f[offsets[s] + e] for s, e in zip(slots, tracked)) for f in funcs)


def binary_polynomials(A):
    n = A.size
    px = tuple(x for x in range(n) for y in range(n))
    py = tuple(y for x in range(n) for y in range(n))
    consts = [tuple([c] * (n * n)) for c in range(n)]
    return naive_sg([A] * (n * n), [px, py] + consts)


def binary_terms(A):
    n = A.size
    px = tuple(x for x in range(n) for y in range(n))
    py = tuple(y for x in range(n) for y in range(n))
    return naive_sg([A] * (n * n), [px, py])


def naive_zeta(A, alpha, beta):
    """(a,b) related iff no binary polynomial g has g(., a) collapse beta into
    alpha while g(., b) does not, or vice versa.

    The pairs (g(., a), g(., b)) are generated as full maps in A^(2n).
    """
    n = A.size
    pairs = [(x, y) for x in range(n) for y in range(n) if beta[x] == beta[y] and alpha[x] != alpha[y]]

    def collapses(f):
        return all(alpha[f[x]] == alpha[f[y]] for x, y in pairs)

    def related(a, b):
        ident = tuple(range(n)) * 2
        param = (a,) * n + (b,) * n
        consts = [(c,) * (2 * n) for c in range(n)]
        for g in naive_sg([A] * (2 * n), [ident, param] + consts):
            if collapses(g[:n]) != collapses(g[n:]):
                return False
        return True

    rel = [[a == b or related(min(a, b), max(a, b)) for b in range(n)] for a in range(n)]
    return tuple(min(b for b in range(n) if rel[a][b]) for a in range(n))


def naive_semilattice_free(A):
    n = A.size
    terms = binary_terms(A)
    for a in range(n):
        for b in range(n):
            if a == b:
                continue
            B = sorted(naive_sg([A], [(a,), (b,)]))
            elems = [t[0] for t in B]
            for rep in set_partitions(len(elems)):
                full = {e: rep[i] for i, e in enumerate(elems)}
                if full[a] == full[b] or not _preserves_on(A, elems, full):
                    continue
                for f in terms:
                    if all(full[f[x * n + y]] == full[b] for x, y in ((a, b), (b, a), (b, b))):
                        return False
    return True


def _preserves_on(A, elems, cls):
    for arity, table in ops(A):
        for x in itertools.product(elems, repeat=arity):
            for pos in range(arity):
                for y in elems:
                    if cls[y] == cls[x[pos]]:
                        z = list(x)
                        z[pos] = y
                        if cls[int(table[x])] != cls[int(table[tuple(z)])]:
                            return False
    return True


def solutions(P):
    """Every satisfying assignment, by plain enumeration of the allowed sets."""
    if P.falsum:
        return set()
    vs = list(P.variables)
    out = set()
    for vals in itertools.product(*[sorted(P.allowed(v)) for v in vs]):
        a = dict(zip(vs, vals))
        if all(tuple(a[v] for v in c.scope) in c.tuples for c in P.constraints):
            out.add(vals)
    return out


def gauss_mod3(rows):
    """Solvability of a linear system over Z3; rows are lists of coefficients with the constant last."""
    m = [list(r) for r in rows]
    if not m:
        return True
    ncols = len(m[0]) - 1
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c] % 3), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 if m[r][c] % 3 == 1 else 2
        m[r] = [(x * inv) % 3 for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] % 3:
                f = m[i][c]
                m[i] = [(x - f * y) % 3 for x, y in zip(m[i], m[r])]
        r += 1
    return all(any(x % 3 for x in row[:-1]) or row[-1] % 3 == 0 for row in m)
