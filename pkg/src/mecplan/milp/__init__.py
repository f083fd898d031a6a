"""Step-1 model, LP relaxation and branch-and-bound."""

from .bnb import (INFEASIBLE_STATUS, OPTIMAL_STATUS, TIME_LIMIT, InfeasibleModel, SolveLimits,
                  SolveOutcome, equal_share_total, solve_lp_relaxation, solve_p1)
from .brute import TooLarge, brute_force_plan
from .lpformat import write_lp
from .model import MilpModel, build_p1, canonical_labels, plan_to_vector, vector_to_plan
from .simplex import LPResult, NumericalStall, solve_bounded_lp

__all__ = [
    "INFEASIBLE_STATUS", "OPTIMAL_STATUS", "TIME_LIMIT", "InfeasibleModel", "LPResult", "MilpModel",
    "NumericalStall", "SolveLimits", "SolveOutcome", "TooLarge", "brute_force_plan", "build_p1",
    "canonical_labels", "equal_share_total", "plan_to_vector", "solve_bounded_lp",
    "solve_lp_relaxation", "solve_p1", "vector_to_plan", "write_lp",
]
