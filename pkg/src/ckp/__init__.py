"""Chance-constrained binary knapsack: non-convex relaxation and 1/2-approximation."""

from .approx import ApproxCertificate, round_down, single_item, solve_approx
from .bounds import ConvexBound, SeparationResult, convex_bound, separate, submodular_F
from .core import (
    BinarySolution,
    CKPError,
    ConstructionError,
    DomainError,
    FractionalSolution,
    Instance,
    InvalidInstanceError,
    eval_g,
    eval_g_convex,
    is_feasible,
    normal_quantile,
    validate,
    worst_case_kappa,
)
from .exact import ExactResult, branch_and_bound, brute_force
from .generators import GenSpec, example1, example2, generate
from .ncr import (
    build_x,
    delta_lower,
    delta_upper,
    item_cost,
    ordering,
    profit_density,
    reverse_point,
    reverse_points,
    solve_ncr,
)

__version__ = "0.1.0"
