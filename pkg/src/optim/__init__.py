from src.optim.solver import SolveOutcome, solve
from src.optim.subproblems import (
    ConvexSubproblem,
    build_init_subproblem,
    build_inner_subproblem,
    build_power_init_subproblem,
    build_power_subproblem,
    build_zf_power_subproblem,
)
from src.optim.surrogates import EigTangent, ExpTangent, recover_rank_one, update_aux

__all__ = [
    "ConvexSubproblem",
    "EigTangent",
    "ExpTangent",
    "SolveOutcome",
    "build_init_subproblem",
    "build_inner_subproblem",
    "build_power_init_subproblem",
    "build_power_subproblem",
    "build_zf_power_subproblem",
    "recover_rank_one",
    "solve",
    "update_aux",
]
