"""Nodal Lagrange basis on the reference triangle."""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from . import reference
from .polynomials import monomial_gradients, monomial_hessians, monomials


def lagrange_nodes(m: int) -> np.ndarray:
    """Equispaced nodes: vertices, then edge nodes per local edge (start to
    end), then interior nodes."""
    if m < 1:
        raise ValueError(f"Lagrange degree must be >= 1, got {m}")
    pts = [reference.VERTICES[i] for i in range(3)]
    s = np.arange(1, m) / m
    for e in range(3):
        pts.extend(reference.edge_points(e, s))
    for j in range(1, m):
        for i in range(1, m - j):
            pts.append(np.array([i / m, j / m]))
    return np.array(pts)


class LagrangeBasis:
    def __init__(self, m: int):
        self.degree = m
        self.nodes = lagrange_nodes(m)
        self.dim = (m + 1) * (m + 2) // 2
        V = monomials(m, self.nodes)
        self._coeffs = np.linalg.inv(V)

    @property
    def n_edge_nodes(self) -> int:
        return self.degree - 1

    @property
    def n_interior_nodes(self) -> int:
        return (self.degree - 1) * (self.degree - 2) // 2

    def values(self, pts: np.ndarray) -> np.ndarray:
        """(npts, dim)"""
        return monomials(self.degree, np.atleast_2d(pts)) @ self._coeffs

    def gradients(self, pts: np.ndarray) -> np.ndarray:
        """(npts, dim, 2)"""
        G = monomial_gradients(self.degree, np.atleast_2d(pts))
        return np.einsum("pmi,mb->pbi", G, self._coeffs)

    def hessians(self, pts: np.ndarray) -> np.ndarray:
        """(npts, dim, 2, 2)"""
        H = monomial_hessians(self.degree, np.atleast_2d(pts))
        return np.einsum("pmij,mb->pbij", H, self._coeffs)


@lru_cache(maxsize=None)
def lagrange_basis(m: int) -> LagrangeBasis:
    return LagrangeBasis(m)


def lagrange_eval(m: int, p) -> tuple[np.ndarray, np.ndarray]:
    """Values (dim,) and gradients (dim, 2) of the degree-``m`` basis at ``p``."""
    basis = lagrange_basis(m)
    p = np.asarray(p, dtype=float).reshape(1, 2)
    return basis.values(p)[0], basis.gradients(p)[0]
