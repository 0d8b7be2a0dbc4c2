"""Exact low-rank solvers for quadratic maximisation over roots of unity, with Max-3-Cut tooling."""

from .core import Assignment, HermitianOperand, make_alphabet, quadratic_form
from .graph import WeightedGraph, cut_value, laplacian, load_graph
from .parallel import ParallelConfig
from .pipeline import SolveReport, approximate_low_rank, brute_force_oracle
from .rank1 import Solution, solve_rank1
from .rankr import solve_rankr
from .spectra import top_r_factor

__all__ = [
    "Assignment", "HermitianOperand", "make_alphabet", "quadratic_form",
    "WeightedGraph", "cut_value", "laplacian", "load_graph",
    "ParallelConfig", "SolveReport", "approximate_low_rank", "brute_force_oracle",
    "Solution", "solve_rank1", "solve_rankr", "top_r_factor",
]
