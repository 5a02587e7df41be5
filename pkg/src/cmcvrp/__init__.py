"""Recursive constrained max-cut decomposition for capacitated vehicle routing.

Customer sets are split by annealing a penalised max-cut QUBO, either on
Euclidean distances (DBD) or on angular dissimilarity around the depot
(ABD), until every part is small; the parts are routed independently and
their routes are united into one master solution.
"""

from .annealer import AnnealParams, AnnealResult, anneal_once, best_of_restarts
from .decomposer import PartitionNode, Subproblem, decompose, leaf_statistics
from .estimator import CMCPartitioner
from .exceptions import (
    CmcVrpError,
    CvrpParseError,
    DomainError,
    InfeasibleInstanceError,
    IntegrationError,
    SolutionParseError,
    TuningError,
    UnknownInstanceError,
)
from .instance import Instance, cur, distance, load_bundled, parse_cvrplib, read_instance
from .metrics import count_variables, fs_rate, gap, vr_rate
from .pipeline import RunRecord, convergence_curve, integrate, run_decomposed, run_naive
from .qubo import ABD, DBD, CmcSpec, QuboModel, build_cmc, energy, to_ising, tune_mu
from .routing import Budget, Solution, solve_exact, solve_heuristic, validate

__version__ = "0.1.0"

__all__ = [
    "ABD",
    "AnnealParams",
    "AnnealResult",
    "Budget",
    "CMCPartitioner",
    "CmcSpec",
    "CmcVrpError",
    "CvrpParseError",
    "DBD",
    "DomainError",
    "InfeasibleInstanceError",
    "Instance",
    "IntegrationError",
    "PartitionNode",
    "QuboModel",
    "RunRecord",
    "Solution",
    "SolutionParseError",
    "Subproblem",
    "TuningError",
    "UnknownInstanceError",
    "anneal_once",
    "best_of_restarts",
    "build_cmc",
    "convergence_curve",
    "count_variables",
    "cur",
    "decompose",
    "distance",
    "energy",
    "fs_rate",
    "gap",
    "integrate",
    "leaf_statistics",
    "load_bundled",
    "parse_cvrplib",
    "read_instance",
    "run_decomposed",
    "run_naive",
    "solve_exact",
    "solve_heuristic",
    "to_ising",
    "tune_mu",
    "validate",
    "vr_rate",
]
