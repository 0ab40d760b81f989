"""Block inverse (subspace) iteration with Rayleigh-Ritz extraction."""
from __future__ import annotations

import numpy as np
import scipy.linalg as la


class EigenNoConvergence(RuntimeError):
    pass


def _m_orthonormalize(Y, M_apply, drop=1e-13):
    """M-orthonormal basis of span(Y), dropping numerically dependent directions."""
    MY = M_apply(Y)
    G = Y.T @ MY
    G = 0.5 * (G + G.T)
    w, V = la.eigh(G)
    keep = w > drop * max(w.max(), 1e-300)
    return Y @ (V[:, keep] / np.sqrt(w[keep]))


def smallest_eigenpair(apply_inverse, A_apply, M_apply, n, block=4, tol=1e-12, maxiter=500, seed=0):
    """Eigenvalue of A x = theta M x closest to the shift built into
    ``apply_inverse`` (which maps X to (A - sigma M)^{-1} M X, blockwise).

    A must be symmetric and M symmetric positive definite on the iterated
    subspace. Returns (theta, x, iterations).
    """
    rng = np.random.default_rng(seed)
    X = apply_inverse(rng.standard_normal((n, block)))
    theta_old = None
    for it in range(1, maxiter + 1):
        X = _m_orthonormalize(X, M_apply)
        if X.shape[1] == 0:
            raise EigenNoConvergence("iteration subspace collapsed")
        Y = apply_inverse(X)
        Y = _m_orthonormalize(Y, M_apply)
        H = Y.T @ A_apply(Y)
        H = 0.5 * (H + H.T)
        theta, V = la.eigh(H)  # Y is M-orthonormal
        X = Y @ V
        j = int(np.argmin(np.abs(theta - _shift_of(apply_inverse))))
        if theta_old is not None and abs(theta[j] - theta_old) <= tol * max(abs(theta[j]), 1e-300):
            return float(theta[j]), X[:, j], it
        if theta_old is not None and abs(theta[j]) < 1e-300:
            return 0.0, X[:, j], it
        theta_old = theta[j]
        X = X[:, np.argsort(np.abs(theta - _shift_of(apply_inverse)))]
    raise EigenNoConvergence(f"no convergence after {maxiter} iterations")


def _shift_of(apply_inverse) -> float:
    return getattr(apply_inverse, "shift", 0.0)


class ShiftedInverse:
    """Callable X -> (A - sigma M)^{-1} M X carrying its shift."""

    def __init__(self, solve_block, shift: float):
        self._solve = solve_block
        self.shift = shift

    def __call__(self, X):
        return self._solve(X)
