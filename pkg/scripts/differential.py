"""Run the solver against the brute-force oracle and summarise per algebra.

Exits 1 when any instance disagrees or raises.
"""

import argparse
import json
import sys
import time

from csplab import library
from csplab.oracle import differential_run
from csplab.solver import solve_csp

DEFAULT = "a2semi,a2maj,a2aff,z3aff,mixed4"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--algebras", default=DEFAULT, help="comma-separated builtin names")
    ap.add_argument("--n", type=int, default=500, help="instances per algebra")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--max-vars", type=int, default=8)
    ap.add_argument("--report", default=None, help="write the full JSON report here")
    args = ap.parse_args()

    total_ok = True
    summary = {}
    for name in args.algebras.split(","):
        t0 = time.perf_counter()
        rep = differential_run([library.builtin(name)], args.n, args.seed, solve_csp, max_vars=args.max_vars)
        wall = time.perf_counter() - t0
        pct = rep.percentiles()
        print(f"{name:8s} n={rep.total:4d} sat={rep.sat:4d} disagree={len(rep.disagreements)} "
              f"errors={len(rep.errors)} p50={pct.get('p50', 0) * 1e3:.1f}ms "
              f"p99={pct.get('p99', 0) * 1e3:.1f}ms wall={wall:.1f}s")
        summary[name] = rep.to_json()
        total_ok &= rep.ok
    if args.report:
        with open(args.report, "w") as fh:
            json.dump(summary, fh, indent=1)
    sys.exit(0 if total_ok else 1)


if __name__ == "__main__":
    main()
