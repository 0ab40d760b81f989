"""Monomial evaluation helpers shared by the reference bases."""
from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def exponents(degree: int) -> tuple[tuple[int, int], ...]:
    """Exponent pairs (a, b) of x**a * y**b with a + b <= degree, graded."""
    return tuple((t - b, b) for t in range(degree + 1) for b in range(t + 1))


def _pow(x: np.ndarray, e: int) -> np.ndarray:
    return x**e if e > 0 else np.ones_like(x)


def monomials(degree: int, pts: np.ndarray) -> np.ndarray:
    """Values, shape (npts, nmono)."""
    x, y = pts[:, 0], pts[:, 1]
    return np.stack([_pow(x, a) * _pow(y, b) for a, b in exponents(degree)], axis=-1)


def monomial_gradients(degree: int, pts: np.ndarray) -> np.ndarray:
    """Gradients, shape (npts, nmono, 2)."""
    x, y = pts[:, 0], pts[:, 1]
    cols = []
    for a, b in exponents(degree):
        dx = a * _pow(x, a - 1) * _pow(y, b) if a > 0 else np.zeros_like(x)
        dy = b * _pow(x, a) * _pow(y, b - 1) if b > 0 else np.zeros_like(x)
        cols.append(np.stack([dx, dy], axis=-1))
    return np.stack(cols, axis=1)


def monomial_hessians(degree: int, pts: np.ndarray) -> np.ndarray:
    """Hessians, shape (npts, nmono, 2, 2)."""
    x, y = pts[:, 0], pts[:, 1]
    zero = np.zeros_like(x)
    out = []
    for a, b in exponents(degree):
        dxx = a * (a - 1) * _pow(x, a - 2) * _pow(y, b) if a > 1 else zero
        dyy = b * (b - 1) * _pow(x, a) * _pow(y, b - 2) if b > 1 else zero
        dxy = a * b * _pow(x, a - 1) * _pow(y, b - 1) if a > 0 and b > 0 else zero
        out.append(np.stack([np.stack([dxx, dxy], -1), np.stack([dxy, dyy], -1)], -2))
    return np.stack(out, axis=1)
