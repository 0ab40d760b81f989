"""Gauss quadrature on the reference triangle and the unit interval."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_EXACTNESS = 20


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (nq, dim)
    weights: np.ndarray  # (nq,)
    degree: int

    @property
    def size(self) -> int:
        return len(self.weights)


def _gauss01(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _check(exactness: int) -> None:
    if exactness < 0 or exactness > MAX_EXACTNESS:
        raise ValueError(
            f"quadrature exactness {exactness} unavailable (supported: 0..{MAX_EXACTNESS})"
        )


@lru_cache(maxsize=None)
def quad_edge(exactness: int) -> QuadratureRule:
    """Gauss-Legendre rule on [0, 1] exact for polynomials of degree ``exactness``."""
    _check(exactness)
    n = max(1, (exactness + 2) // 2)
    s, w = _gauss01(n)
    s.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(s[:, None], w, exactness)


@lru_cache(maxsize=None)
def quad_triangle(exactness: int) -> QuadratureRule:
    """Collapsed (Duffy) Gauss rule on the triangle (0,0), (1,0), (0,1).

    The collapse x = u, y = v (1 - u) adds one polynomial degree in ``u``
    through the Jacobian, hence the extra point in that direction.
    """
    _check(exactness)
    nu = max(1, (exactness + 3) // 2)
    nv = max(1, (exactness + 2) // 2)
    u, wu = _gauss01(nu)
    v, wv = _gauss01(nv)
    U, V = np.meshgrid(u, v, indexing="ij")
    WU, WV = np.meshgrid(wu, wv, indexing="ij")
    pts = np.column_stack([U.ravel(), (V * (1.0 - U)).ravel()])
    wts = (WU * WV * (1.0 - U)).ravel()
    pts.setflags(write=False)
    wts.setflags(write=False)
    return QuadratureRule(pts, wts, exactness)
