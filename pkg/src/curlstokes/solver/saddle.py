"""Direct and iterative solution of the augmented saddle-point system

    [ A   B^T  0 ] [u]   [F]
    [ B   0    m ] [p] = [G]
    [ 0   m^T  0 ] [l]   [0]

where m_j is the integral of the pressure basis function q_j, so the
multiplier l fixes the pressure mean to zero.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

KERNEL_MESSAGE = "possible nontrivial kernel W"


class KernelWarning(RuntimeWarning):
    pass


class SolverError(RuntimeError):
    pass


@dataclass
class SaddleSystem:
    A: sp.spmatrix
    B: sp.spmatrix
    F: np.ndarray
    G: np.ndarray
    m: np.ndarray
    # optional norm matrices for the kernel probe and the iterative solver
    N_u: sp.spmatrix | None = None
    N_p: sp.spmatrix | None = None

    def __post_init__(self):
        n_p, n_u = self.B.shape
        if self.A.shape != (n_u, n_u) or len(self.F) != n_u or len(self.G) != n_p or len(self.m) != n_p:
            raise ValueError("inconsistent saddle-point block dimensions")
        if not np.any(self.m):
            raise ValueError("pressure mean vector m vanishes")

    @classmethod
    def from_blocks(cls, blocks, with_norms: bool = True) -> "SaddleSystem":
        """Wrap assembled SystemBlocks, adding H(curl) and H1 Gram matrices."""
        N_u = N_p = None
        if with_norms:
            from ..assembly.forms import assemble_lagrange_mass, assemble_lagrange_stiffness, assemble_mass

            N_u = assemble_mass(blocks.mesh, blocks.vdm, blocks.cq) + blocks.parts["curl_curl"]
            N_p = assemble_lagrange_stiffness(blocks.mesh, blocks.pdm, blocks.cq) + assemble_lagrange_mass(
                blocks.mesh, blocks.pdm, blocks.cq
            )
        return cls(blocks.A, blocks.B, blocks.F, blocks.G, blocks.m, N_u, N_p)

    @property
    def n_u(self) -> int:
        return self.A.shape[0]

    @property
    def n_p(self) -> int:
        return self.B.shape[0]

    def matrix(self) -> sp.csc_matrix:
        m = sp.csr_matrix(self.m.reshape(-1, 1))
        return sp.bmat([[self.A, self.B.T, None], [self.B, None, m], [None, m.T, None]], format="csc")

    def rhs(self) -> np.ndarray:
        return np.concatenate([self.F, self.G, [0.0]])

    def norm_matrix(self) -> sp.csc_matrix:
        N_u = self.N_u if self.N_u is not None else sp.identity(self.n_u)
        N_p = self.N_p if self.N_p is not None else sp.identity(self.n_p)
        return sp.block_diag([N_u, N_p, sp.identity(1)], format="csc")


@dataclass(frozen=True)
class SolveOptions:
    method: str = "direct"  # or "minres"
    refine_steps: int = 3
    pivot_tol: float = 1e-13
    kernel_probe: bool = True
    kernel_tol: float = 1e-6
    minres_rtol: float = 1e-13
    minres_maxiter: int = 20000


@dataclass
class Solution:
    u: np.ndarray
    p: np.ndarray
    lam: float
    diagnostics: dict = field(default_factory=dict)
    near_null: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def kernel_flag(self) -> bool:
        return bool(self.diagnostics.get("kernel", {}).get("flag", False))

    def to_json(self) -> str:
        return json.dumps(self.diagnostics, indent=2, sort_keys=True)


def residuals(system: SaddleSystem, u, p) -> dict:
    ru = system.A @ u + system.B.T @ p - system.F
    rp = system.B @ u - system.G
    nF = np.linalg.norm(system.F)
    return {
        "velocity": float(np.linalg.norm(ru) / (nF if nF > 0 else 1.0)),
        "constraint": float(np.linalg.norm(rp) / (np.linalg.norm(system.G) + 1.0)),
        "constraint_max": float(np.max(np.abs(rp), initial=0.0)),
    }


def solve_saddle(system: SaddleSystem, opts: SolveOptions | None = None) -> Solution:
    opts = opts or SolveOptions()
    K = system.matrix()
    b = system.rhs()
    diag: dict = {"n_u": system.n_u, "n_p": system.n_p, "method": opts.method}
    lu = None
    if opts.method == "direct":
        try:
            lu = spla.splu(K)
        except RuntimeError as exc:
            diag["factorization"] = f"breakdown: {exc}"
            return _singular_solution(system, K, diag, opts)
        d = np.abs(lu.U.diagonal())
        ratio = float(d.min() / d.max())
        diag["pivots"] = {"min": float(d.min()), "max": float(d.max()), "ratio": ratio}
        x = lu.solve(b)
        for _ in range(opts.refine_steps):
            r = b - K @ x
            if np.linalg.norm(r) <= 1e-15 * max(np.linalg.norm(b), 1.0):
                break
            x = x + lu.solve(r)
    elif opts.method == "minres":
        x, info = _minres(system, K, b, opts)
        diag["minres_info"] = int(info)
        if info != 0:
            raise SolverError(f"MINRES did not converge (info={info})")
    else:
        raise ValueError(f"unknown solver method {opts.method!r}")

    u, p, lam = x[: system.n_u], x[system.n_u : -1], float(x[-1])
    diag["residuals"] = residuals(system, u, p)
    diag["lambda"] = lam
    diag["pressure_mean"] = float(system.m @ p)
    sol = Solution(u, p, lam, diag)
    near_singular = "pivots" in diag and diag["pivots"]["ratio"] < opts.pivot_tol
    if opts.kernel_probe or near_singular:
        probe = kernel_probe(system, K, lu, opts.kernel_tol)
        diag["kernel"] = probe.pop("report")
        diag["kernel"]["flag"] = diag["kernel"]["flag"] or near_singular
        sol.near_null = probe["vector"]
        if diag["kernel"]["flag"]:
            warnings.warn(f"{KERNEL_MESSAGE}: {diag['kernel']['detail']}", KernelWarning, stacklevel=2)
    return sol


def kernel_probe(system: SaddleSystem, K, lu=None, tol: float = 1e-6, shift: float = 0.0, maxiter: int = 60) -> dict:
    """Eigenvalue theta closest to zero of A v = theta N_u v on
    X_h = {v : B v = 0}, N_u the velocity norm matrix.

    Each inverse step reuses the saddle factorization with right-hand side
    (N_u x, 0, 0), so iterates stay in X_h and pressure modes never enter.
    A tiny |theta| means a (nearly) nontrivial kernel W.
    """
    from .eigen import ShiftedInverse, smallest_eigenpair

    N_u = system.N_u if system.N_u is not None else sp.identity(system.n_u, format="csr")
    n_u, n_p = system.n_u, system.n_p
    if lu is None or shift:
        N = sp.block_diag([N_u, sp.csr_matrix((n_p + 1, n_p + 1))], format="csc")
        lu = spla.splu((K - shift * N).tocsc())

    def inverse(X):
        rhs = np.vstack([N_u @ X, np.zeros((n_p + 1, X.shape[1]))])
        return np.column_stack([lu.solve(r) for r in rhs.T])[:n_u]

    try:
        theta, x, its = smallest_eigenpair(
            ShiftedInverse(inverse, shift), lambda X: system.A @ X, lambda X: N_u @ X, n_u,
            block=2, tol=1e-4, maxiter=maxiter,
        )
        converged = True
    except Exception:  # an estimate is enough for a diagnostic
        theta, x, its, converged = _last_estimate(inverse, system.A, N_u, n_u)
    flag = abs(theta) < tol
    detail = (
        f"smallest |a(v, v)| / |v|^2 on the discrete divergence-free space is {abs(theta):.3e} "
        f"(tolerance {tol:.1e}); near-null velocity returned, e.g. a rigid rotation on a full-slip disk"
    )
    return {
        "report": {
            "flag": bool(flag),
            "theta": float(theta),
            "iterations": its,
            "converged": converged,
            "detail": detail if flag else "none",
        },
        "vector": (x, np.zeros(n_p)),
    }


def _last_estimate(inverse, A, N_u, n):
    X = inverse(np.random.default_rng(0).standard_normal((n, 1)))
    for _ in range(5):
        X = inverse(X / np.sqrt(X[:, 0] @ (N_u @ X[:, 0])))
    x = X[:, 0] / np.sqrt(X[:, 0] @ (N_u @ X[:, 0]))
    return float(x @ (A @ x)), x, 5, False


def _singular_solution(system, K, diag, opts) -> Solution:
    """Exactly singular factorization: report and return the kernel vector."""
    N = system.norm_matrix()
    scale = spla.norm(K, 1) / max(spla.norm(N, 1), 1e-300)
    probe = kernel_probe(system, K, None, opts.kernel_tol, shift=1e-10 * scale)
    diag["kernel"] = probe["report"]
    diag["kernel"]["flag"] = True
    diag["kernel"]["detail"] = "factorization breakdown; " + diag["kernel"]["detail"]
    warnings.warn(f"{KERNEL_MESSAGE}: singular factorization", KernelWarning, stacklevel=3)
    nan_u = np.full(system.n_u, np.nan)
    nan_p = np.full(system.n_p, np.nan)
    return Solution(nan_u, nan_p, float("nan"), diag, probe["vector"])


def _minres(system: SaddleSystem, K, b, opts):
    """MINRES with the block-diagonal preconditioner diag(N_u + A_+, N_p, 1)."""
    if system.N_u is None or system.N_p is None:
        raise SolverError("MINRES needs the H(curl) and H1 Gram matrices for preconditioning")
    lu_u = spla.splu(sp.csc_matrix(system.N_u))
    lu_p = spla.splu(sp.csc_matrix(system.N_p))
    n_u, n_p = system.n_u, system.n_p
    mm = float(system.m @ lu_p.solve(system.m))

    def apply(r):
        out = np.empty_like(r)
        out[:n_u] = lu_u.solve(r[:n_u])
        out[n_u:-1] = lu_p.solve(r[n_u:-1])
        out[-1] = r[-1] / mm
        return out

    P = spla.LinearOperator(K.shape, matvec=apply, dtype=float)
    return spla.minres(K, b, M=P, rtol=opts.minres_rtol, maxiter=opts.minres_maxiter)
