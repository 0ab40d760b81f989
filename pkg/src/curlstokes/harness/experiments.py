"""Convergence study, benchmark flows and the in-run invariant checks."""
from __future__ import annotations

import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from ..assembly import (
    BCSpec,
    DirichletBC,
    SlipBC,
    assemble_lagrange_mass,
    assemble_mass,
    assemble_system,
    interpolate_lagrange,
    interpolate_velocity,
)
from ..curvature import SOURCES, analytic_weingarten
from ..mesh import DomainSpec, curve_boundary, generate_domain
from ..solver import (
    GradientSpace,
    KernelWarning,
    SaddleSystem,
    SolveOptions,
    recover_pressure,
    solve_saddle,
)
from .errors import NORMS, compute_errors, observed_rates
from .evaluate import PointLocator, evaluate_velocity
from .manufactured import manufactured_solution

CASES = ("manufactured_ellipse", "annulus", "lid_cavity", "half_disk_cavity", "cylinder")
DEFAULT_WIDTHS = {
    "manufactured_ellipse": (0.4, 0.2, 0.1, 0.05),
    "annulus": (0.25,),
    "lid_cavity": (0.05,),
    "half_disk_cavity": (0.05,),
    "cylinder": (0.25,),
}
RESIDUAL_TOL = 1e-9
DIVERGENCE_TOL = 1e-9
RECOVERY_TOL = 1e-8
MEAN_TOL = 1e-10
PROFILE_SAMPLES = 101
PROFILE_CLAMP = 1e-3
BOUNDARY_OFFSET = 1e-10


class InvariantError(AssertionError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    case: str
    degree: int = 3
    geom_order: int | None = None
    widths: tuple = ()
    curvature: str = "geometric"
    C_w: float | None = None
    out: str | None = None
    sequential: bool = False
    kernel_probe: bool = True

    def __post_init__(self):
        if self.case not in CASES:
            raise ValueError(f"unknown case {self.case!r}; choose from {CASES}")
        if self.degree not in (1, 2, 3):
            raise ValueError("degree k must be 1, 2 or 3")
        if self.curvature not in SOURCES:
            raise ValueError(f"curvature must be one of {SOURCES}")
        widths = tuple(float(h) for h in (self.widths or DEFAULT_WIDTHS[self.case]))
        if any(h <= 0 for h in widths) or any(a <= b for a, b in zip(widths, widths[1:])):
            raise ValueError("mesh widths must be positive and strictly decreasing")
        object.__setattr__(self, "widths", widths)
        if self.geom_order is not None and self.geom_order < 1:
            raise ValueError("geometry order must be >= 1")

    @property
    def g(self) -> int:
        return self.geom_order if self.geom_order is not None else self.degree + 2

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        keys = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - keys
        if unknown:
            raise ValueError(f"unknown configuration keys {sorted(unknown)}")
        return cls(**data)


# --- cases -------------------------------------------------------------------


def _rotation(x):
    return np.column_stack([-x[:, 1], x[:, 0]])


def _uniform_x(x):
    return np.column_stack([np.ones(len(x)), np.zeros(len(x))])


@dataclass(frozen=True)
class Case:
    domain: str
    params: dict
    lid: Callable | None  # Dirichlet data, None for a pure slip problem
    curve: Callable | None = None  # profile curve gamma -> points
    gamma: tuple = (PROFILE_CLAMP, 1 - PROFILE_CLAMP)


def _annulus_curve(g):
    return np.column_stack([1 + 3 * g, np.zeros_like(g)])


def _cavity_curve(g):
    return np.column_stack([np.full_like(g, 0.5), g])


def _half_disk_curve(g):
    return np.column_stack([np.zeros_like(g), g - 1.0])


def _cylinder_curve(g):
    # on the slip circle, nudged into the fluid
    return (1 + BOUNDARY_OFFSET) * np.column_stack([-np.cos(g), np.sin(g)])


CASE_TABLE = {
    "manufactured_ellipse": Case("ellipse", {}, None),
    "annulus": Case("annulus", {}, _rotation, _annulus_curve),
    "lid_cavity": Case("unit_square", {}, _uniform_x, _cavity_curve),
    "half_disk_cavity": Case("half_disk", {}, _uniform_x, _half_disk_curve),
    "cylinder": Case(
        "square_minus_disk", {}, _uniform_x, _cylinder_curve, (PROFILE_CLAMP * np.pi, (1 - PROFILE_CLAMP) * np.pi)
    ),
}


def build_mesh_for(case: str, h: float, g: int):
    c = CASE_TABLE[case]
    mesh, chart = generate_domain(DomainSpec(c.domain, h, params=c.params))
    return curve_boundary(mesh, chart, g), chart


def boundary_conditions(case: str, config: ExperimentConfig, chart) -> tuple[BCSpec, Callable | None]:
    """BCs and body force for a case."""
    if case == "manufactured_ellipse":
        ms = manufactured_solution()

        def W(x):
            return analytic_weingarten(chart, x, arc=0, tol=None)

        slip = SlipBC(curvature=config.curvature, g=ms.slip_data(W))
        return BCSpec(slip=slip, z=ms.z), ms.f
    lid = CASE_TABLE[case].lid
    return BCSpec(slip=SlipBC(curvature=config.curvature), dirichlet=DirichletBC(lid, config.C_w)), None


# --- invariants --------------------------------------------------------------


def check_invariants(blocks, system: SaddleSystem, sol, p_recovered=None) -> dict:
    """Residuals, discrete divergence-freeness, mean-zero pressure and
    (when given) pressure-recovery agreement. Each entry carries its value,
    tolerance and pass flag."""
    M_u = assemble_mass(blocks.mesh, blocks.vdm, blocks.cq)
    M_p = assemble_lagrange_mass(blocks.mesh, blocks.pdm, blocks.cq)
    u, p = sol.u, sol.p
    u_norm = float(np.sqrt(u @ (M_u @ u)))
    p_norm = float(np.sqrt(p @ (M_p @ p)))
    res = sol.diagnostics["residuals"]
    checks = {
        "velocity_residual": (res["velocity"], RESIDUAL_TOL),
        "constraint_residual": (res["constraint"], RESIDUAL_TOL),
        "divergence": (
            float(np.max(np.abs(blocks.B @ u - blocks.G), initial=0.0)),
            DIVERGENCE_TOL * (1 + u_norm),
        ),
        "pressure_mean": (abs(float(blocks.m @ p)), MEAN_TOL * max(p_norm, 1e-300) + 1e-300),
    }
    if p_recovered is not None:
        d = p_recovered - p
        checks["pressure_recovery"] = (
            float(np.sqrt(d @ (M_p @ d)) / max(p_norm, 1e-300)),
            RECOVERY_TOL,
        )
    return {k: {"value": v, "tol": t, "pass": bool(v <= t)} for k, (v, t) in checks.items()}


def all_passed(checks: dict) -> bool:
    return all(c["pass"] for c in checks.values())


# --- single run --------------------------------------------------------------


@dataclass
class RunResult:
    case: str
    h: float
    k: int
    g: int
    mesh: object
    blocks: object
    solution: object
    p_recovered: np.ndarray
    checks: dict
    diagnostics: dict


def run_case(config: ExperimentConfig, h: float, opts: SolveOptions | None = None) -> RunResult:
    """Mesh, assemble, solve, recover the pressure and check invariants."""
    t0 = time.perf_counter()
    k, g = config.degree, config.g
    mesh, chart = build_mesh_for(config.case, h, g)
    bc, f = boundary_conditions(config.case, config, chart)
    blocks = assemble_system(mesh, k, bc, f)
    system = SaddleSystem.from_blocks(blocks)
    opts = opts or SolveOptions(kernel_probe=config.kernel_probe)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", KernelWarning)
        sol = solve_saddle(system, opts)
    p_rec = recover_pressure(blocks, sol.u, GradientSpace.from_blocks(blocks))
    checks = check_invariants(blocks, system, sol, p_rec)
    diag = {
        "case": config.case,
        "h": h,
        "k": k,
        "g": g,
        "curvature": config.curvature,
        "n_cells": mesh.n_cells,
        "n_curved_cells": int(np.count_nonzero(mesh.curved)),
        "solver": sol.diagnostics,
        "warnings": [str(w.message) for w in caught],
        "checks": checks,
        "seconds": time.perf_counter() - t0,
    }
    return RunResult(config.case, h, k, g, mesh, blocks, sol, p_rec, checks, diag)


# --- convergence study -------------------------------------------------------


@dataclass
class ErrorReport:
    widths: tuple
    errors: list  # dict per width
    interpolation: list  # errors of the interpolated exact solution
    diagnostics: list = field(default_factory=list)

    @staticmethod
    def _rates(widths, rows) -> list:
        r = {n: observed_rates(widths, [e[n] for e in rows]) for n in NORMS}
        return [{n: float(r[n][i]) for n in NORMS} for i in range(len(widths) - 1)]

    @property
    def rates(self) -> list:
        return self._rates(self.widths, self.errors)

    @property
    def interpolation_rates(self) -> list:
        return self._rates(self.widths, self.interpolation)

    @property
    def passed(self) -> bool:
        return all(all_passed(d["checks"]) for d in self.diagnostics)


def _convergence_job(config: ExperimentConfig, h: float):
    run = run_case(config, h)
    ms = manufactured_solution()
    b = run.blocks
    err = compute_errors(run.mesh, b.vdm, b.pdm, run.solution.u, run.solution.p, ms)
    ui = interpolate_velocity(run.mesh, b.vdm, ms.u)
    pi = interpolate_lagrange(run.mesh, b.pdm, ms.p)
    ierr = compute_errors(run.mesh, b.vdm, b.pdm, ui, pi, ms)
    return err, ierr, run.diagnostics


def _map(func, config, widths):
    if config.sequential or len(widths) == 1:
        return [func(config, h) for h in widths]
    workers = min(len(widths), os.cpu_count() or 1)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, [config] * len(widths), widths))


def run_convergence(config: ExperimentConfig) -> ErrorReport:
    """Manufactured-solution study over ``config.widths``; also reports the
    errors of the interpolated exact solution as a control."""
    if config.case != "manufactured_ellipse":
        raise ValueError("run_convergence needs case 'manufactured_ellipse'")
    out = _map(_convergence_job, config, config.widths)
    report = ErrorReport(config.widths, [o[0] for o in out], [o[1] for o in out], [o[2] for o in out])
    if config.out:
        write_outputs_convergence(report, Path(config.out))
    return report


def write_outputs_convergence(report: ErrorReport, out: Path) -> None:
    from .export import write_convergence_csv
    from .report import write_json

    write_json(out / "diagnostics.json", {"runs": report.diagnostics, "passed": report.passed})
    if report.passed:
        write_convergence_csv(out / "convergence.csv", report.widths, report.errors, report.rates)
        write_convergence_csv(
            out / "interpolation.csv", report.widths, report.interpolation, report.interpolation_rates
        )


# --- benchmarks --------------------------------------------------------------


@dataclass
class ProfileSample:
    curve: str
    gamma: np.ndarray
    points: np.ndarray
    velocity: np.ndarray  # (n, 2)

    @property
    def magnitude(self) -> np.ndarray:
        return np.hypot(self.velocity[:, 0], self.velocity[:, 1])


def profile_gamma(case: str, n: int = PROFILE_SAMPLES) -> np.ndarray:
    lo, hi = CASE_TABLE[case].gamma
    return np.linspace(lo, hi, n)


def sample_profile(run: RunResult, n: int = PROFILE_SAMPLES) -> ProfileSample:
    gamma = profile_gamma(run.case, n)
    pts = CASE_TABLE[run.case].curve(gamma)
    loc = PointLocator(run.mesh).locate(pts)
    vel = evaluate_velocity(run.mesh, run.blocks.vdm, run.solution.u, loc)
    return ProfileSample(run.case, gamma, pts, vel)


def benchmark_properties(case: str, prof: ProfileSample) -> dict:
    """Physical properties of each benchmark, checked on its profile."""
    out = {}
    if case == "annulus":
        exact = np.hypot(prof.points[:, 0], prof.points[:, 1])
        dev = float(np.max(np.abs(prof.magnitude - exact)))
        out["rigid_rotation"] = (dev, 1e-3 * float(exact.max()))
    elif case == "lid_cavity":
        i = int(np.argmin(np.abs(prof.gamma - 0.02)))
        # slip floor: the return flow does not vanish at the wall
        out["slip_floor_speed"] = (-abs(float(prof.velocity[i, 0])), -0.05)
        out["lid_speed"] = (abs(float(prof.magnitude[-1]) - 1.0), 0.05)
    elif case == "cylinder":
        ux = prof.velocity[:, 0]
        dev = float(np.max(np.abs(ux - ux[::-1])))
        out["mirror_symmetry"] = (dev, 0.05 * float(np.max(np.abs(ux))))
    return {k: {"value": v, "tol": t, "pass": bool(v <= t)} for k, (v, t) in out.items()}


@dataclass
class BenchmarkResult:
    run: RunResult
    profile: ProfileSample
    properties: dict

    @property
    def passed(self) -> bool:
        return all_passed(self.run.checks)


def run_benchmark(config: ExperimentConfig, h: float | None = None) -> BenchmarkResult:
    """Solve one benchmark flow, sample its profile and, with
    ``config.out`` set, write VTK, profile CSV and JSON diagnostics. Files
    other than the diagnostics are written only if the invariants hold."""
    if config.case == "manufactured_ellipse":
        raise ValueError("use run_convergence for the manufactured case")
    h = h if h is not None else config.widths[-1]
    run = run_case(config, h)
    prof = sample_profile(run)
    props = benchmark_properties(config.case, prof)
    run.diagnostics["properties"] = props
    result = BenchmarkResult(run, prof, props)
    if config.out:
        from .export import export_vtk, write_profile_csv
        from .report import write_json

        out = Path(config.out)
        write_json(out / f"{config.case}_diagnostics.json", run.diagnostics)
        if result.passed:
            b = run.blocks
            export_vtk(out / f"{config.case}.vtk", run.mesh, b.vdm, b.pdm, run.solution.u, run.solution.p)
            write_profile_csv(out / f"{config.case}_profile.csv", prof.gamma, prof.velocity)
    return result


# --- kernel detection --------------------------------------------------------


def run_kernel_probe(h: float = 0.04, k: int = 3, g: int | None = None, curvature: str = "geometric") -> dict:
    """Full-slip unit disk with f = 0: W contains the rigid rotation.

    Returns the probe report and the angle, in the velocity L2 inner
    product, between the returned near-null vector and the interpolated
    rotation.
    """
    g = g if g is not None else k + 2
    mesh, chart = generate_domain(DomainSpec("ellipse", h, params={"a": 1.0, "b": 1.0}))
    mesh = curve_boundary(mesh, chart, g)
    blocks = assemble_system(mesh, k, BCSpec(slip=SlipBC(curvature=curvature)))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", KernelWarning)
        sol = solve_saddle(SaddleSystem.from_blocks(blocks), SolveOptions(kernel_probe=True))
    v = sol.near_null[0]
    r = interpolate_velocity(mesh, blocks.vdm, _rotation)
    M = assemble_mass(mesh, blocks.vdm, blocks.cq)
    v = v / np.sqrt(v @ (M @ v))
    r = r / np.sqrt(r @ (M @ r))
    perp = v - (r @ (M @ v)) * r
    sin = np.sqrt(max(0.0, perp @ (M @ perp)))
    return {
        "flag": sol.kernel_flag,
        "theta": sol.diagnostics["kernel"]["theta"],
        "angle": float(np.arcsin(min(1.0, sin))),
        "warnings": [str(w.message) for w in caught if issubclass(w.category, KernelWarning)],
    }


def config_dict(config: ExperimentConfig) -> dict:
    return asdict(config)
