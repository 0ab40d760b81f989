"""First-kind Nedelec edge elements on the reference triangle.

The local space is P_{k-1}^2 + S_k with S_k = {(-y, x) q : q homogeneous of
degree k - 1}. Degrees of freedom are tangential edge moments against
Legendre polynomials of degree < k (local edge orientation) followed by
interior moments against the componentwise monomials of degree <= k - 2.
The basis is the dual basis of these functionals.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from . import reference
from .polynomials import exponents, monomial_gradients, monomials
from .quadrature import quad_edge, quad_triangle

SUPPORTED_DEGREES = (1, 2, 3)


def _spanning_set(k: int) -> np.ndarray:
    """Coefficients over the degree-k monomials, shape (nmono, 2, k(k+2))."""
    exps = exponents(k)
    index = {e: i for i, e in enumerate(exps)}
    cols = []
    for a, b in exponents(k - 1):
        for comp in (0, 1):
            c = np.zeros((len(exps), 2))
            c[index[(a, b)], comp] = 1.0
            cols.append(c)
    for a in range(k - 1, -1, -1):
        b = k - 1 - a
        c = np.zeros((len(exps), 2))
        c[index[(a, b + 1)], 0] = -1.0
        c[index[(a + 1, b)], 1] = 1.0
        cols.append(c)
    return np.stack(cols, axis=-1)


class NedelecBasis:
    def __init__(self, k: int):
        if k not in SUPPORTED_DEGREES:
            raise ValueError(f"unsupported Nedelec degree {k}; choose one of {SUPPORTED_DEGREES}")
        self.degree = k
        self.dim = k * (k + 2)
        self.n_edge_dofs = k
        self.n_interior_dofs = k * (k - 1)
        self._span = _spanning_set(k)

        erule = quad_edge(2 * k + 4)
        s, w = erule.points[:, 0], erule.weights
        leg = np.stack(
            [np.polynomial.legendre.legval(2 * s - 1, np.eye(k)[j]) for j in range(k)]
        )  # (k, nq)
        pts, blocks = [], []
        n_edge_pts = 3 * len(s)
        trule = quad_triangle(2 * k + 2)
        npts = n_edge_pts + trule.size
        for e in range(3):
            pts.append(reference.edge_points(e, s))
            d = reference.edge_direction(e)
            for j in range(k):
                phi = np.zeros((npts, 2))
                sl = slice(e * len(s), (e + 1) * len(s))
                phi[sl] = (w * leg[j])[:, None] * d
                blocks.append(phi)
        pts.append(trule.points)
        for a, b in exponents(k - 2) if k >= 2 else ():
            qv = trule.points[:, 0] ** a * trule.points[:, 1] ** b
            for comp in (0, 1):
                phi = np.zeros((npts, 2))
                phi[n_edge_pts:, comp] = trule.weights * qv
                blocks.append(phi)
        self.dof_points = np.concatenate(pts)
        self.dof_tensor = np.stack(blocks)  # (ndofs, npts, 2)

        V = np.einsum("dpi,pji->dj", self.dof_tensor, self._span_values(self.dof_points))
        self._coeffs = np.linalg.inv(V)

    def _span_values(self, pts: np.ndarray) -> np.ndarray:
        M = monomials(self.degree, np.atleast_2d(pts))
        return np.einsum("pm,mij->pji", M, self._span)

    def _span_curls(self, pts: np.ndarray) -> np.ndarray:
        G = monomial_gradients(self.degree, np.atleast_2d(pts))
        # curl v = d v_y / dx - d v_x / dy
        return np.einsum("pm,mj->pj", G[:, :, 0], self._span[:, 1, :]) - np.einsum(
            "pm,mj->pj", G[:, :, 1], self._span[:, 0, :]
        )

    def values(self, pts: np.ndarray) -> np.ndarray:
        """(npts, dim, 2)"""
        return np.einsum("pji,jb->pbi", self._span_values(pts), self._coeffs)

    def curls(self, pts: np.ndarray) -> np.ndarray:
        """(npts, dim)"""
        return self._span_curls(pts) @ self._coeffs

    def apply_dofs(self, vals: np.ndarray) -> np.ndarray:
        """Apply the functionals to reference field values sampled at
        ``dof_points``: (..., npts, 2) -> (..., dim)."""
        return np.einsum("dpi,...pi->...d", self.dof_tensor, vals)

    def orientation_signs(self, edge_signs: np.ndarray) -> np.ndarray:
        """Local-to-global dof signs from per-cell edge signs (..., 3).

        Reversing an edge maps the Legendre weight L_j(s) to (-1)^j L_j(s)
        and flips the tangent, so moment j picks up sign**(j + 1).
        """
        edge_signs = np.asarray(edge_signs)
        j = np.arange(self.degree)
        s = edge_signs[..., :, None] ** (j + 1)
        s = s.reshape(*edge_signs.shape[:-1], 3 * self.degree)
        tail = np.ones((*edge_signs.shape[:-1], self.n_interior_dofs))
        return np.concatenate([s, tail], axis=-1)


@lru_cache(maxsize=None)
def nedelec_basis(k: int) -> NedelecBasis:
    return NedelecBasis(k)


def nedelec_eval(k: int, p) -> tuple[np.ndarray, np.ndarray]:
    """Reference values (dim, 2) and curls (dim,) at point ``p``."""
    basis = nedelec_basis(k)
    p = np.asarray(p, dtype=float).reshape(1, 2)
    if p[0, 0] < -1e-12 or p[0, 1] < -1e-12 or p.sum() > 1 + 1e-12:
        raise ValueError(f"point {p[0]} outside the reference triangle")
    return basis.values(p)[0], basis.curls(p)[0]
