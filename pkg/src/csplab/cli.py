"""Command line entry point.

    csplab alg info ALG
    csplab alg classify ALG [--max-wnu-arity K]
    csplab alg edges ALG
    csplab alg centralizer ALG --alpha BLOCKS --beta BLOCKS
    csplab csp solve INSTANCE [--fallback brute] [--trace out.json] [--budget N]
    csplab csp consistency INSTANCE --level {1,2,K}
    csplab csp diff --algebra NAME [--algebra NAME ...] --n 500 --seed 7 [--report out.json]

ALG is a JSON file or a builtin name. Congruences are block lists such as
``[[0,1],[2]]`` or the literals ``0`` and ``1``. Exit codes: 0 success or
Sat, 1 Unsat or a negative verdict, 2 usage or runtime error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import library
from .algebra import FiniteAlgebra, load_algebra
from .centralizer import quasi_centralizer
from .config import SolverConfig
from .congruence import Congruence, con_lattice, from_blocks, monolith, one, zero
from .consistency import enforce_1_minimality, enforce_k_minimality
from .errors import CsplabError
from .instance import load_instance
from .oracle import differential_run
from .solver import solve_csp
from .terms import NoWitnessUpTo, classify_dichotomy, scan_semilattice_edges


def resolve_algebra(ref: str) -> FiniteAlgebra:
    path = Path(ref)
    if path.suffix == ".json" or path.exists():
        return load_algebra(path)
    return library.builtin(ref)


def parse_congruence(A: FiniteAlgebra, text: str) -> Congruence:
    text = text.strip()
    if text == "0":
        return zero(A)
    if text == "1":
        return one(A)
    blocks = json.loads(text)
    return from_blocks(A, blocks)


def _emit(args, payload: dict, human: str):
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        print(human)


def cmd_info(args) -> int:
    A = resolve_algebra(args.algebra)
    L = con_lattice(A)
    si, mu = monolith(A)
    payload = {
        "id": A.id,
        "size": A.size,
        "operations": [{"name": op.name, "arity": op.arity} for op in A.operations],
        "congruences": [theta.blocks() for theta in L],
        "si": si,
        "monolith": mu.blocks() if si else None,
    }
    ops = ", ".join(f"{op.name}/{op.arity}" for op in A.operations) or "(none)"
    lines = [
        f"algebra {A.id}: size {A.size}, operations {ops}",
        f"Con(A): {len(L)} congruences",
        *(f"  {theta.render()}" for theta in L),
        f"SI: {'yes, monolith ' + mu.render() if si else 'no'}",
    ]
    _emit(args, payload, "\n".join(lines))
    return 0


def cmd_classify(args) -> int:
    A = resolve_algebra(args.algebra)
    res = classify_dichotomy(A, args.max_wnu_arity)
    if isinstance(res, NoWitnessUpTo):
        payload = {"verdict": "NoWitnessUpTo", "k_max": res.k_max}
        _emit(args, payload, res.describe())
        return 1
    payload = {"verdict": "Tractable", "arity": res.arity, "witness": str(res.witness)}
    _emit(args, payload, res.describe())
    return 0


def cmd_edges(args) -> int:
    A = resolve_algebra(args.algebra)
    scan = scan_semilattice_edges(A)
    rows = []
    for e in scan.edges:
        blocks = [[e.universe[i] for i in b] for b in e.theta.blocks()]
        rows.append({"a": e.a, "b": e.b, "kind": e.kind, "theta": blocks, "witness": str(e.witness)})
    lines = [f"{r['a']} -> {r['b']}  {r['kind']}  theta={json.dumps(r['theta'], separators=(',', ':'))}  {r['witness']}"
             for r in rows]
    if not rows:
        lines = ["semilattice free"]
    _emit(args, {"semilattice_free": scan.semilattice_free, "edges": rows}, "\n".join(lines))
    return 0


def cmd_centralizer(args) -> int:
    A = resolve_algebra(args.algebra)
    alpha = parse_congruence(A, args.alpha)
    beta = parse_congruence(A, args.beta)
    zeta = quasi_centralizer(A, alpha, beta)
    _emit(args, {"zeta": zeta.blocks()}, zeta.render())
    return 0


def _apply_budget(args):
    if getattr(args, "budget", None) is not None:
        os.environ["CSPLAB_BUDGET"] = str(args.budget)


def cmd_solve(args) -> int:
    _apply_budget(args)
    P = load_instance(args.instance, resolve=library.builtin)
    config = SolverConfig(fallback=args.fallback)
    out = solve_csp(P, config)
    if args.trace:
        with open(args.trace, "w") as fh:
            json.dump(out.trace, fh, indent=1, default=str)
    human = str(out.verdict)
    if out.sat:
        human += " " + " ".join(f"{v}={x}" for v, x in out.assignment.items())
    _emit(args, out.to_json(), human)
    return 0 if out.sat else 1


def cmd_consistency(args) -> int:
    P = load_instance(args.instance, resolve=library.builtin)
    if args.level == 1:
        Q = enforce_1_minimality(P)
    else:
        res = enforce_k_minimality(P, args.level)
        Q = None if res is None else res[0]
    if Q is None:
        _emit(args, {"level": args.level, "consistent": False}, "inconsistent")
        return 1
    doms = {str(v): sorted(Q.allowed(v)) for v in Q.variables}
    human = "consistent\n" + "\n".join(f"  {v}: {vals}" for v, vals in doms.items())
    payload = {"level": args.level, "consistent": True, "domains": doms, "instance": Q.to_json()}
    _emit(args, payload, human)
    return 0


def cmd_diff(args) -> int:
    _apply_budget(args)
    names = [n for a in (args.algebra or []) for n in a.split(",") if n]
    algebras = [resolve_algebra(n) for n in names]
    report = differential_run(algebras, args.n, args.seed, solve_csp, max_vars=args.max_vars)
    data = report.to_json()
    if args.report:
        with open(args.report, "w") as fh:
            json.dump(data, fh, indent=1)
    human = (
        f"instances {report.total}, sat {report.sat}, disagreements {len(report.disagreements)}, "
        f"errors {len(report.errors)}"
    )
    _emit(args, data, human)
    return 0 if report.ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="csplab", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    top = parser.add_subparsers(dest="group", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine readable output")

    alg = top.add_parser("alg", help="algebra analysis").add_subparsers(dest="verb", required=True)
    p = alg.add_parser("info", parents=[common])
    p.add_argument("algebra")
    p.set_defaults(func=cmd_info)
    p = alg.add_parser("classify", parents=[common])
    p.add_argument("algebra")
    p.add_argument("--max-wnu-arity", type=int, default=None)
    p.set_defaults(func=cmd_classify)
    p = alg.add_parser("edges", parents=[common])
    p.add_argument("algebra")
    p.set_defaults(func=cmd_edges)
    p = alg.add_parser("centralizer", parents=[common])
    p.add_argument("algebra")
    p.add_argument("--alpha", required=True)
    p.add_argument("--beta", required=True)
    p.set_defaults(func=cmd_centralizer)

    csp = top.add_parser("csp", help="instances").add_subparsers(dest="verb", required=True)
    p = csp.add_parser("solve", parents=[common])
    p.add_argument("instance")
    p.add_argument("--fallback", default="brute", choices=["brute", "external"])
    p.add_argument("--trace", default=None, help="write the pipeline event log here")
    p.add_argument("--budget", type=int, default=None, help="closure tuple budget")
    p.set_defaults(func=cmd_solve)
    p = csp.add_parser("consistency", parents=[common])
    p.add_argument("instance")
    p.add_argument("--level", type=int, default=2, help="1, or k >= 2 for (k,k+1)-minimality")
    p.set_defaults(func=cmd_consistency)
    p = csp.add_parser("diff", parents=[common])
    p.add_argument("--algebra", action="append", help="builtin name or file; repeat or comma-separate")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-vars", type=int, default=8)
    p.add_argument("--report", default=None)
    p.add_argument("--budget", type=int, default=None)
    p.set_defaults(func=cmd_diff)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "level", 1) < 1:
        parser.error("--level must be positive")
    try:
        return args.func(args)
    except (CsplabError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
