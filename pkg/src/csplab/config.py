"""Global budgets. ``CSPLAB_BUDGET`` overrides the closure tuple cap."""

import os
from dataclasses import dataclass

DEFAULT_TUPLE_BUDGET = 2_000_000
DEFAULT_ORACLE_BUDGET = 10_000_000
MAX_LATTICE_SIZE = 12


def tuple_budget():
    value = os.environ.get("CSPLAB_BUDGET")
    if value:
        return int(value)
    return DEFAULT_TUPLE_BUDGET


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for :func:`csplab.solver.solve_csp`.

    ``max_depth`` of ``None`` means "largest domain size + 2", computed per
    instance. ``strict`` turns theory violations (an unflagged value that
    later turns out unsupported) into hard errors instead of trace events.
    """

    fallback: str = "brute"
    max_depth: int | None = None
    strict: bool = True
    oracle_budget: int = DEFAULT_ORACLE_BUDGET
