"""Classify each corpus language by its polymorphism algebra and solve a few samples."""

import argparse

from csplab.oracle import brute_force_solve, corpus
from csplab.solver import solve_csp
from csplab.terms import Tractable, classify_dichotomy


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=20, help="random instances per tractable language")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    for lang in corpus():
        res = classify_dichotomy(lang.algebra)
        closed = lang.check_closed()
        line = f"{lang.name:10s} {lang.algebra.id:7s} closed={closed} {res.describe()}"
        if isinstance(res, Tractable):
            agree = 0
            for i in range(args.samples):
                P = lang.instance(6, 6, args.seed + i)
                agree += solve_csp(P).sat == brute_force_solve(P).sat
            line += f"  solver agrees {agree}/{args.samples}"
        print(line)


if __name__ == "__main__":
    main()
