from .errors import NORMS, compute_errors, observed_rates
from .evaluate import PointLocationError, PointLocator, evaluate_pressure, evaluate_velocity
from .experiments import (
    CASES,
    BenchmarkResult,
    ErrorReport,
    ExperimentConfig,
    ProfileSample,
    RunResult,
    check_invariants,
    run_benchmark,
    run_case,
    run_convergence,
    run_kernel_probe,
    sample_profile,
)
from .export import export_vtk, subdivision, write_convergence_csv, write_profile_csv
from .manufactured import ManufacturedSolution, manufactured_solution

__all__ = [
    "NORMS",
    "compute_errors",
    "observed_rates",
    "PointLocationError",
    "PointLocator",
    "evaluate_pressure",
    "evaluate_velocity",
    "CASES",
    "BenchmarkResult",
    "ErrorReport",
    "ExperimentConfig",
    "ProfileSample",
    "RunResult",
    "check_invariants",
    "run_benchmark",
    "run_case",
    "run_convergence",
    "run_kernel_probe",
    "sample_profile",
    "export_vtk",
    "subdivision",
    "write_convergence_csv",
    "write_profile_csv",
    "ManufacturedSolution",
    "manufactured_solution",
]
