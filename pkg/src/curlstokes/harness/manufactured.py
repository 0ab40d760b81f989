"""Manufactured solution on the ellipse with symbolically derived data.

u = (-sin 2x cos 2y, cos 2x sin 2y) is divergence free and p = x sin 3x cos y.
The source is f = curl curl u + grad p, the slip data g = omega + 2 W u_t
and the normal data z = u . n. Derivatives come from sympy and are checked
against central finite differences before use.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
import sympy

FD_STEP = 1e-6
FD_RTOL = 1e-5


class ManufacturedDataError(RuntimeError):
    pass


@dataclass(frozen=True)
class ManufacturedSolution:
    u: Callable  # (n, 2) -> (n, 2)
    curl_u: Callable  # (n, 2) -> (n,)
    p: Callable
    grad_p: Callable
    f: Callable

    def z(self, x, n):
        return np.einsum("pi,pi->p", self.u(x), n)

    def slip_data(self, weingarten: Callable) -> Callable:
        """g(x, n) = omega + 2 W u_t with W(x) supplied by the caller."""

        def g(x, n):
            t = np.column_stack([-n[:, 1], n[:, 0]])
            ut = np.einsum("pi,pi->p", self.u(x), t)
            return self.curl_u(x) + 2.0 * weingarten(x) * ut

        return g


def _vector(fx, fy):
    def call(x):
        x = np.asarray(x, dtype=float).reshape(-1, 2)
        X, Y = x[:, 0], x[:, 1]
        return np.column_stack([np.broadcast_to(fx(X, Y), X.shape), np.broadcast_to(fy(X, Y), X.shape)])

    return call


def _scalar(fs):
    def call(x):
        x = np.asarray(x, dtype=float).reshape(-1, 2)
        return np.broadcast_to(fs(x[:, 0], x[:, 1]), x[:, 0].shape).astype(float)

    return call


@lru_cache(maxsize=1)
def manufactured_solution(check: bool = True) -> ManufacturedSolution:
    x, y = sympy.symbols("x y", real=True)
    ux = -sympy.sin(2 * x) * sympy.cos(2 * y)
    uy = sympy.cos(2 * x) * sympy.sin(2 * y)
    p = x * sympy.sin(3 * x) * sympy.cos(y)
    omega = sympy.diff(uy, x) - sympy.diff(ux, y)
    fx = sympy.diff(omega, y) + sympy.diff(p, x)
    fy = -sympy.diff(omega, x) + sympy.diff(p, y)
    if sympy.simplify(sympy.diff(ux, x) + sympy.diff(uy, y)) != 0:
        raise ManufacturedDataError("manufactured velocity is not divergence free")

    def lam(e):
        return sympy.lambdify((x, y), e, "numpy")

    sol = ManufacturedSolution(
        u=_vector(lam(ux), lam(uy)),
        curl_u=_scalar(lam(omega)),
        p=_scalar(lam(p)),
        grad_p=_vector(lam(sympy.diff(p, x)), lam(sympy.diff(p, y))),
        f=_vector(lam(fx), lam(fy)),
    )
    if check:
        check_against_finite_differences(sol)
    return sol


def _fd(func, pts, axis, h=FD_STEP):
    e = np.zeros(2)
    e[axis] = h
    return (func(pts + e) - func(pts - e)) / (2 * h)


def check_against_finite_differences(sol: ManufacturedSolution, pts=None) -> float:
    """Max relative deviation of the symbolic derivatives from central
    differences; raises if it exceeds FD_RTOL."""
    if pts is None:
        pts = np.random.default_rng(7).uniform([-1.0, -0.5], [1.0, 0.5], size=(64, 2))
    checks = []
    # omega = d u_y / dx - d u_x / dy
    omega_fd = _fd(sol.u, pts, 0)[:, 1] - _fd(sol.u, pts, 1)[:, 0]
    checks.append((sol.curl_u(pts), omega_fd))
    checks.append((sol.grad_p(pts), np.column_stack([_fd(sol.p, pts, 0), _fd(sol.p, pts, 1)])))
    # f = (d omega / dy, -d omega / dx) + grad p, differenced from omega and p
    f_fd = np.column_stack([_fd(sol.curl_u, pts, 1), -_fd(sol.curl_u, pts, 0)])
    f_fd += np.column_stack([_fd(sol.p, pts, 0), _fd(sol.p, pts, 1)])
    checks.append((sol.f(pts), f_fd))
    worst = 0.0
    for exact, approx in checks:
        scale = max(np.max(np.abs(exact)), 1e-300)
        worst = max(worst, float(np.max(np.abs(exact - approx)) / scale))
    if worst > FD_RTOL:
        raise ManufacturedDataError(f"symbolic data disagree with finite differences ({worst:.2e})")
    return worst
