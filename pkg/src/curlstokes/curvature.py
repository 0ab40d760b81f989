"""Boundary Weingarten coefficient W (alpha = 2 W) on facet quadrature points.

In 2D the Weingarten map is the scalar W = -kappa, where kappa is the signed
curvature of the boundary traversed with the domain on its left. A convex
outer boundary therefore has W <= 0 and a hole boundary W >= 0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fem import reference
from .fem.lagrange import lagrange_basis
from .fem.transform import evaluate_edge_transform
from .mesh.chart import BoundaryChart, EllipseArc
from .mesh.core import Mesh

SOURCES = ("analytic", "geometric")


class CurvatureError(ValueError):
    pass


@dataclass(frozen=True)
class WeingartenField:
    facets: np.ndarray  # (nf,) facet ids
    s: np.ndarray  # (nq,) edge parameters along the local edge direction
    values: np.ndarray  # (nf, nq)
    source: str


def analytic_weingarten(chart: BoundaryChart, x, arc: int | None = None, tol: float | None = 1e-8):
    """W at physical point(s) ``x`` from the chart.

    With ``arc`` given, the point is projected onto that arc; otherwise the
    nearest arc is used. ``tol`` bounds the allowed distance from the arc;
    pass None to evaluate at the projection regardless (points on a curved
    discrete boundary sit a small distance off the exact curve).
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    out = np.empty(len(x))
    for i, p in enumerate(x):
        if arc is None:
            idx, _, dist = chart.nearest(p)
        else:
            idx = arc
            y, _ = chart.arcs[idx].project(p)
            dist = float(np.linalg.norm(y[0] - p))
        if tol is not None and dist > tol:
            raise CurvatureError(f"point {p} is {dist:.3g} away from the boundary chart")
        a = chart.arcs[idx]
        if isinstance(a, EllipseArc):
            _, t = a.project(p)
            out[i] = -a.signed_curvature(t)[0]
        else:
            out[i] = 0.0
    return out


def geometric_weingarten(mesh: Mesh, facets, s) -> np.ndarray:
    """W = -(x' x x'') / |x'|^3 from the cell map restricted to each facet,
    with the sign fixed by the domain-on-left traversal. Shape (nf, nq)."""
    facets = np.asarray(facets, dtype=np.int64)
    s = np.asarray(s, dtype=float)
    g = mesh.geometry_order
    basis = lagrange_basis(g)
    cells = mesh.facet_cell[facets]
    local = mesh.facet_local[facets]
    nodes = mesh.geometry_nodes[cells]
    W = np.zeros((len(facets), len(s)))
    for e in range(3):
        sel = np.flatnonzero(local == e)
        if not len(sel):
            continue
        d = reference.edge_direction(e)
        pts = reference.edge_points(e, s)
        dN = basis.gradients(pts) @ d  # (nq, nn)
        d2N = np.einsum("pnij,i,j->pn", basis.hessians(pts), d, d)
        x1 = np.einsum("pn,fni->fpi", dN, nodes[sel])
        x2 = np.einsum("pn,fni->fpi", d2N, nodes[sel])
        speed = np.linalg.norm(x1, axis=-1)
        if np.any(speed < 1e-12):
            raise CurvatureError("degenerate facet parametrization (|x'| < 1e-12)")
        kappa_local = (x1[..., 0] * x2[..., 1] - x1[..., 1] * x2[..., 0]) / speed**3
        W[sel] = -kappa_local
    # flip to the domain-on-left traversal
    orient = _orientation(mesh, facets, s)
    W *= orient[:, None]
    W[_straight(mesh, facets)] = 0.0
    return W


def _orientation(mesh: Mesh, facets, s) -> np.ndarray:
    cells = mesh.facet_cell[facets]
    et = evaluate_edge_transform(
        mesh.geometry_nodes[cells], mesh.geometry_order, mesh.facet_local[facets], s[:1], np.ones(1)
    )
    return et.orientation


def _straight(mesh: Mesh, facets) -> np.ndarray:
    """Facets known to be straight: on a segment arc or owned by an affine cell."""
    straight = ~mesh.curved[mesh.facet_cell[facets]]
    if mesh.chart is not None:
        arcs = mesh.facet_arc[facets]
        on_segment = np.array([a >= 0 and not mesh.chart.arcs[a].curved for a in arcs], dtype=bool)
        straight |= on_segment
    return straight


def weingarten_field(mesh: Mesh, facets, s, source: str = "geometric") -> WeingartenField:
    """W on the given facets at edge parameters ``s`` from either source."""
    if source not in SOURCES:
        raise ValueError(f"unknown curvature source {source!r}; choose from {SOURCES}")
    facets = np.asarray(facets, dtype=np.int64)
    s = np.asarray(s, dtype=float)
    if source == "geometric":
        values = geometric_weingarten(mesh, facets, s) if len(facets) else np.zeros((0, len(s)))
        return WeingartenField(facets, s, values, source)
    if mesh.chart is None:
        raise CurvatureError("analytic curvature needs a boundary chart")
    values = np.zeros((len(facets), len(s)))
    if len(facets):
        cells = mesh.facet_cell[facets]
        et = evaluate_edge_transform(
            mesh.geometry_nodes[cells], mesh.geometry_order, mesh.facet_local[facets], s, np.ones(len(s))
        )
        for i, f in enumerate(facets):
            arc = int(mesh.facet_arc[f])
            if arc < 0:
                raise CurvatureError(f"facet {f} is not attached to a chart arc")
            values[i] = analytic_weingarten(mesh.chart, et.cell.x[i], arc=arc, tol=None)
    return WeingartenField(facets, s, values, source)
