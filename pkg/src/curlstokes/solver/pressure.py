"""Pressure recovery from the velocity and projection onto discrete gradients.

Both rest on the Neumann problem (grad p, grad q) = r(q) on Q_h with a
mean-zero side condition; the discrete gradient D writes grad q_j in the
velocity basis, so (v, grad q_j) = (B v)_j.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..assembly.forms import assemble_lagrange_stiffness
from ..assembly.interpolate import discrete_gradient


@dataclass
class GradientSpace:
    """Operators for grad Q_h inside V_h."""

    D: sp.csr_matrix  # (n_u, n_p)
    K: sp.csr_matrix  # (grad q_i, grad q_j)
    B: sp.csr_matrix  # (v_i, grad q_j), (n_p, n_u)
    m: np.ndarray  # integrals of q_j

    @classmethod
    def from_blocks(cls, blocks) -> "GradientSpace":
        D = discrete_gradient(blocks.mesh, blocks.vdm, blocks.pdm)
        K = assemble_lagrange_stiffness(blocks.mesh, blocks.pdm, blocks.cq)
        return cls(D, K, blocks.B, blocks.m)

    def __post_init__(self):
        m = sp.csr_matrix(self.m.reshape(-1, 1))
        self._lu = spla.splu(sp.bmat([[self.K, m], [m.T, None]], format="csc"))

    def solve_neumann(self, r: np.ndarray, method: str = "direct", x0=None) -> np.ndarray:
        """Mean-zero phi with K phi = r (r must annihilate constants)."""
        if method == "direct":
            return self._lu.solve(np.append(r, 0.0))[:-1]
        if method == "cg":
            phi, info = spla.cg(self.K, r, x0=x0, rtol=1e-14, atol=0.0, maxiter=10 * len(r))
            if info != 0:
                raise RuntimeError(f"CG for the pressure Laplacian did not converge (info={info})")
            return phi - (self.m @ phi) / self.m.sum()
        raise ValueError(f"unknown method {method!r}")


def recover_pressure(blocks, u: np.ndarray, gradients: GradientSpace | None = None, method="direct", x0=None):
    """Mean-zero p_h with (grad p_h, grad q) = F(grad q) - a(u_h, grad q).

    F(grad q) holds the source and all boundary data paired with grad q, so
    this is the pressure-Poisson identity tested with discrete gradients.
    """
    gradients = gradients or GradientSpace.from_blocks(blocks)
    D = gradients.D
    r = D.T @ (blocks.F - blocks.A @ u)
    return gradients.solve_neumann(r, method=method, x0=x0)


def project_to_discrete_gradients(gradients: GradientSpace, v: np.ndarray):
    """L2 projection of a velocity-space member onto grad Q_h.

    Returns (D phi, phi) with phi mean-zero and (grad phi, grad q) = (v, grad q).
    """
    phi = gradients.solve_neumann(gradients.B @ v)
    return gradients.D @ phi, phi
