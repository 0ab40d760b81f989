"""Numerical estimates of the discrete Poincare and inf-sup constants."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..assembly.dofmap import lagrange_dofmap, nedelec_dofmap
from ..assembly.forms import (
    assemble_b,
    assemble_curl_curl,
    assemble_lagrange_mass,
    assemble_lagrange_stiffness,
    assemble_mass,
    cell_quadrature,
    default_exactness,
    pressure_integrals,
)
from ..mesh.core import Mesh
from .eigen import EigenNoConvergence, ShiftedInverse, smallest_eigenpair


SMALL = 24  # pressure dimension below which a full-space block is used


class StabilityError(RuntimeError):
    pass


@dataclass(frozen=True)
class StabilityOperators:
    M: sp.csr_matrix  # velocity L2 Gram
    C: sp.csr_matrix  # curl-curl
    B: sp.csr_matrix  # (v, grad q)
    K_p: sp.csr_matrix
    M_p: sp.csr_matrix
    m: np.ndarray

    @classmethod
    def build(cls, mesh: Mesh, k_u: int, k_p: int | None = None) -> "StabilityOperators":
        k_p = k_u if k_p is None else k_p
        vdm, pdm = nedelec_dofmap(mesh, k_u), lagrange_dofmap(mesh, k_p)
        cq = cell_quadrature(mesh, default_exactness(mesh, max(k_u, k_p)))
        return cls(
            assemble_mass(mesh, vdm, cq),
            assemble_curl_curl(mesh, vdm, cq),
            assemble_b(mesh, vdm, pdm, cq, allow_incompatible=k_p != k_u),
            assemble_lagrange_stiffness(mesh, pdm, cq),
            assemble_lagrange_mass(mesh, pdm, cq),
            pressure_integrals(mesh, pdm, cq),
        )


def _augmented(top_left, B, m) -> sp.csc_matrix:
    mcol = sp.csr_matrix(m.reshape(-1, 1))
    return sp.bmat([[top_left, B.T, None], [B, None, mcol], [None, mcol.T, None]], format="csc")


def _columns(solve, X):
    return np.column_stack([solve(x) for x in X.T])


def estimate_discrete_poincare(
    mesh: Mesh, k: int = 1, ops: StabilityOperators | None = None, tol=1e-12, maxiter=500, shift=-1.0
) -> dict:
    """C_h = 1 / sqrt(lambda_min) for curl-curl on X_h = {v : B v = 0}
    measured in L2.

    Each inverse step solves [[C - s M, B^T, 0], [B, 0, m], [0, m^T, 0]]
    with right-hand side (M x, 0, 0), so iterates stay in X_h. The negative
    shift s keeps the operator invertible even when a harmonic field makes
    lambda_min vanish (non-contractible domains).
    """
    ops = ops or StabilityOperators.build(mesh, k)
    n_u, n_p = ops.B.shape[1], ops.B.shape[0]
    lu = spla.splu(_augmented((ops.C - shift * ops.M).tocsr(), ops.B, ops.m))

    def solve(x):
        return lu.solve(np.concatenate([ops.M @ x, np.zeros(n_p + 1)]))[:n_u]

    inverse = ShiftedInverse(lambda X: _columns(solve, X), shift)
    try:
        lam, _, its = smallest_eigenpair(
            inverse, lambda X: ops.C @ X, lambda X: ops.M @ X, n_u, tol=tol, maxiter=maxiter
        )
    except EigenNoConvergence as exc:
        raise StabilityError(f"Poincare eigen-iteration: {exc}") from exc
    lam = max(lam, 0.0)
    return {
        "lambda_min": lam,
        "C_h": float(1.0 / np.sqrt(lam)) if lam > 0 else float("inf"),
        "iterations": its,
        "n_u": n_u,
        "n_p": n_p,
    }


def estimate_infsup_b(
    mesh: Mesh, k_u: int = 1, k_p: int | None = None, ops: StabilityOperators | None = None, tol=1e-12,
    maxiter=500,
) -> dict:
    """beta_h = min over mean-zero q of sup_v (v, grad q) / (|v|_H(curl) |q|_H1).

    beta_h^2 is the smallest eigenvalue of S q = mu H_Q q with
    S = B H_V^{-1} B^T on mean-zero pressures. Inverse steps apply S^+ via
    the augmented system [[H_V, B^T, 0], [B, 0, m], [0, m^T, 0]] with
    right-hand side (0, r, 0), whose pressure block is -S^+ r.
    """
    ops = ops or StabilityOperators.build(mesh, k_u, k_p)
    n_u, n_p = ops.B.shape[1], ops.B.shape[0]
    H_V = (ops.M + ops.C).tocsc()
    H_Q = (ops.K_p + ops.M_p).tocsr()
    lu = spla.splu(_augmented(H_V, ops.B, ops.m))
    lu_v = spla.splu(H_V)

    def s_pinv(r):
        return -lu.solve(np.concatenate([np.zeros(n_u), r, [0.0]]))[n_u:-1]

    def s_apply(q):
        return ops.B @ lu_v.solve(ops.B.T @ q)

    if n_p <= SMALL:
        # full-space block: Rayleigh-Ritz is exact after the first sweeps
        inverse = ShiftedInverse(lambda X: _columns(s_pinv, H_Q @ X), 0.0)
        try:
            mu, _, its = smallest_eigenpair(
                inverse, lambda X: _columns(s_apply, X), lambda X: H_Q @ X, n_p, block=n_p, tol=tol,
                maxiter=maxiter,
            )
        except EigenNoConvergence as exc:
            raise StabilityError(f"inf-sup eigen-iteration: {exc}") from exc
    else:
        # the spectrum clusters near 1 for compatible pairs, so use Lanczos
        # on S^+ H_Q, self-adjoint in the H_Q inner product
        lu_q = spla.splu(H_Q.tocsc())
        op = spla.LinearOperator((n_p, n_p), matvec=lambda x: H_Q @ s_pinv(H_Q @ x), dtype=float)
        Minv = spla.LinearOperator((n_p, n_p), matvec=lu_q.solve, dtype=float)
        v0 = np.random.default_rng(2).standard_normal(n_p)
        try:
            vals, _ = spla.eigsh(op, k=1, M=H_Q, Minv=Minv, which="LA", tol=tol, maxiter=maxiter, v0=v0)
        except spla.ArpackNoConvergence as exc:
            raise StabilityError(f"inf-sup Lanczos iteration did not converge: {exc}") from exc
        mu, its = (1.0 / vals[0] if vals[0] > 0 else 0.0), None
    mu = max(mu, 0.0)
    return {"beta": float(np.sqrt(mu)), "mu_min": mu, "iterations": its, "n_u": n_u, "n_p": n_p}


def dense_poincare(ops: StabilityOperators) -> float:
    """Reference value of C_h from a null-space basis of B (small meshes)."""
    Zb = la.null_space(ops.B.toarray())
    C = Zb.T @ ops.C.toarray() @ Zb
    M = Zb.T @ ops.M.toarray() @ Zb
    lam = la.eigh(C, M, eigvals_only=True)[0]
    return float(1.0 / np.sqrt(lam))


def dense_infsup(ops: StabilityOperators) -> float:
    """Reference beta_h from dense matrices (small meshes)."""
    B = ops.B.toarray()
    H_V = (ops.M + ops.C).toarray()
    H_Q = (ops.K_p + ops.M_p).toarray()
    S = B @ la.solve(H_V, B.T)
    # restrict to the H_Q-orthogonal complement of constants
    one = np.ones(len(H_Q))
    Q = la.null_space((H_Q @ one)[None, :])
    mu = la.eigh(Q.T @ S @ Q, Q.T @ H_Q @ Q, eigvals_only=True)[0]
    return float(np.sqrt(max(mu, 0.0)))
