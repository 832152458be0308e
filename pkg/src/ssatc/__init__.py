"""Exact stochastic Boolean satisfiability with certified proofs and interpolation."""

from .logic import EXISTS, Partition, Prefix, Quantifier, SsatFormula, random_q
from .oracle import exact_pr
from .solver import SolveOptions, SolveResult, check_implication, solve, solve_partitioned

__all__ = [
    "EXISTS", "Partition", "Prefix", "Quantifier", "SsatFormula", "random_q",
    "exact_pr", "SolveOptions", "SolveResult", "check_implication", "solve", "solve_partitioned",
]
__version__ = "0.1.0"
