"""Routing backends, feasibility checking and solution I/O."""

from .exact import EXACT_LIMIT, solve_exact
from .heuristic import Budget, solve_heuristic
from .milp import emit_milp
from .model import (
    EXACT_SOURCE,
    HEURISTIC,
    INTEGRATED,
    FeasibilityReport,
    Route,
    Solution,
    parse_solution,
    read_solution,
    route_cost,
    solution_cost,
    validate,
    write_solution,
)

__all__ = [
    "Budget",
    "EXACT_LIMIT",
    "EXACT_SOURCE",
    "FeasibilityReport",
    "HEURISTIC",
    "INTEGRATED",
    "Route",
    "Solution",
    "emit_milp",
    "parse_solution",
    "read_solution",
    "route_cost",
    "solution_cost",
    "solve_exact",
    "solve_heuristic",
    "validate",
    "write_solution",
]
