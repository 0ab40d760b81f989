from .pressure import GradientSpace, project_to_discrete_gradients, recover_pressure
from .saddle import KERNEL_MESSAGE, KernelWarning, SaddleSystem, Solution, SolveOptions, SolverError, solve_saddle
from .stability import StabilityError, StabilityOperators, estimate_discrete_poincare, estimate_infsup_b

__all__ = [
    "GradientSpace",
    "project_to_discrete_gradients",
    "recover_pressure",
    "KERNEL_MESSAGE",
    "KernelWarning",
    "SaddleSystem",
    "Solution",
    "SolveOptions",
    "SolverError",
    "solve_saddle",
    "StabilityError",
    "StabilityOperators",
    "estimate_discrete_poincare",
    "estimate_infsup_b",
]
