"""Analytic boundary descriptions: line segments, circular and elliptic arcs.

Each arc is traversed with the domain on its left. Signed curvature follows
that traversal, so a convex outer boundary has positive curvature and a hole
boundary negative curvature.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

SLIP = "slip"
DIRICHLET = "dirichlet"
TAGS = (SLIP, DIRICHLET)


class ProjectionError(RuntimeError):
    pass


@dataclass(frozen=True)
class Segment:
    p0: tuple[float, float]
    p1: tuple[float, float]
    name: str = ""
    tag: str = SLIP
    curved = False

    def point(self, t):
        t = np.asarray(t, dtype=float)[..., None]
        return (1 - t) * np.asarray(self.p0) + t * np.asarray(self.p1)

    @property
    def t_range(self):
        return 0.0, 1.0

    def length(self) -> float:
        return float(np.hypot(*(np.subtract(self.p1, self.p0))))

    def project(self, x):
        x = np.atleast_2d(x)
        d = np.subtract(self.p1, self.p0)
        t = np.clip(((x - self.p0) @ d) / (d @ d), 0.0, 1.0)
        return self.point(t), t

    def signed_curvature(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))


@dataclass(frozen=True)
class EllipseArc:
    """x(t) = center + (a cos t, b sin t) for t from t0 to t1 (t1 < t0 for a
    clockwise traversal). A circle is the case a == b."""

    center: tuple[float, float]
    a: float
    b: float
    t0: float
    t1: float
    name: str = ""
    tag: str = SLIP
    curved = True

    @property
    def orientation(self) -> int:
        return 1 if self.t1 > self.t0 else -1

    @property
    def t_range(self):
        return self.t0, self.t1

    def point(self, t):
        t = np.asarray(t, dtype=float)
        return np.stack(
            [self.center[0] + self.a * np.cos(t), self.center[1] + self.b * np.sin(t)], axis=-1
        )

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        return np.stack([-self.a * np.sin(t), self.b * np.cos(t)], axis=-1)

    def speed(self, t):
        t = np.asarray(t, dtype=float)
        return np.hypot(self.a * np.sin(t), self.b * np.cos(t))

    def signed_curvature(self, t):
        t = np.asarray(t, dtype=float)
        s2, c2 = np.sin(t) ** 2, np.cos(t) ** 2
        return self.orientation * self.a * self.b / (self.a**2 * s2 + self.b**2 * c2) ** 1.5

    def length(self) -> float:
        if self.a == self.b:
            return abs(self.t1 - self.t0) * self.a
        lo, hi = sorted((self.t0, self.t1))
        return integrate.quad(self.speed, lo, hi, epsabs=1e-13, epsrel=1e-13, limit=200)[0]

    def param_at_fraction(self, f):
        """Curve parameters at arc-length fractions ``f`` in [0, 1]."""
        f = np.atleast_1d(np.asarray(f, dtype=float))
        if self.a == self.b:
            return self.t0 + f * (self.t1 - self.t0)
        total = self.length()
        lo, hi = sorted((self.t0, self.t1))

        def arclen(t):
            return abs(integrate.quad(self.speed, self.t0, t, epsabs=1e-14, epsrel=1e-14)[0])

        out = np.empty_like(f)
        for i, fi in enumerate(f):
            if fi <= 0:
                out[i] = self.t0
            elif fi >= 1:
                out[i] = self.t1
            else:
                out[i] = optimize.brentq(lambda t: arclen(t) - fi * total, lo, hi, xtol=1e-15)
        return out

    def _wrap(self, t):
        """Shift angle(s) into the arc's parameter interval (modulo 2 pi)."""
        lo = min(self.t0, self.t1)
        return lo + np.mod(t - lo, 2 * np.pi)

    def project(self, x, tol=1e-15, maxiter=50):
        """Nearest point on the full ellipse, returned with its parameter."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        c = np.asarray(self.center)
        d = x - c
        if self.a == self.b:
            t = np.arctan2(d[:, 1], d[:, 0])
            t = self._wrap(t)
            return self.point(t), t
        t = np.arctan2(d[:, 1] / self.b, d[:, 0] / self.a)
        for _ in range(maxiter):
            st, ct = np.sin(t), np.cos(t)
            # g(t) = (x(t) - p) . x'(t)
            ex, ey = self.a * ct - d[:, 0], self.b * st - d[:, 1]
            dx, dy = -self.a * st, self.b * ct
            g = ex * dx + ey * dy
            dg = dx * dx + dy * dy + ex * (-self.a * ct) + ey * (-self.b * st)
            dg = np.where(np.abs(dg) < 1e-300, 1e-300, dg)
            step = g / dg
            t = t - step
            if np.all(np.abs(step) < tol):
                break
        else:
            raise ProjectionError(f"nearest-point projection on arc {self.name!r} did not converge")
        t = self._wrap(t)
        return self.point(t), t


def CircleArc(center, radius, t0, t1, name="", tag=SLIP) -> EllipseArc:
    return EllipseArc(tuple(center), float(radius), float(radius), float(t0), float(t1), name, tag)


Arc = Segment | EllipseArc


@dataclass(frozen=True)
class BoundaryChart:
    """Closed loops of arcs; ``loops`` lists arc indices per boundary component."""

    arcs: tuple
    loops: tuple = field(default_factory=tuple)

    def __post_init__(self):
        for loop in self.loops:
            for i, j in zip(loop, loop[1:] + loop[:1]):
                a, b = self.arcs[i], self.arcs[j]
                end = a.point(a.t_range[1])
                start = b.point(b.t_range[0])
                if np.hypot(*(np.ravel(end) - np.ravel(start))) > 1e-12:
                    raise ValueError(f"boundary loop not closed between arcs {i} and {j}")

    def nearest(self, x) -> tuple[int, np.ndarray, float]:
        """Arc index, projection and distance for a single point."""
        x = np.asarray(x, dtype=float).reshape(1, 2)
        best = (-1, None, np.inf)
        for i, arc in enumerate(self.arcs):
            y, t = arc.project(x)
            if isinstance(arc, EllipseArc):
                lo, hi = sorted(arc.t_range)
                if not (lo - 1e-12 <= t[0] <= hi + 1e-12):
                    ends = arc.point(np.array([lo, hi]))
                    j = np.argmin(np.linalg.norm(ends - x, axis=1))
                    y = ends[j : j + 1]
            dist = float(np.linalg.norm(y - x))
            if dist < best[2]:
                best = (i, y[0], dist)
        return best

    def arc_index(self, name: str) -> int:
        for i, arc in enumerate(self.arcs):
            if arc.name == name:
                return i
        raise KeyError(name)
