"""Elevate straight boundary cells to order-g isoparametric maps."""
from __future__ import annotations

from dataclasses import replace

import numpy as np

from ..fem import reference
from ..fem.lagrange import lagrange_basis
from ..fem.quadrature import quad_triangle
from ..fem.transform import evaluate_transform
from .chart import BoundaryChart, ProjectionError
from .core import Mesh, MeshError, _frozen, affine_geometry_nodes


def attach_chart(mesh: Mesh, chart: BoundaryChart, tol: float = 1e-8) -> Mesh:
    """Assign each boundary facet to the chart arc containing both of its
    endpoints (within ``tol``). Ties, as for a facet joining two corners,
    go to the arc closest to the chord midpoint. Tags are kept."""
    arcs = np.empty(mesh.n_facets, dtype=np.int64)
    for f, e in enumerate(mesh.facet_edge):
        a, b = mesh.vertices[mesh.edges[e]]
        mid = 0.5 * (a + b)
        scores = []
        for arc in chart.arcs:
            ends = max(_point_arc_distance(arc, a), _point_arc_distance(arc, b))
            scores.append((ends > tol, _point_arc_distance(arc, mid), ends))
        best = min(range(len(scores)), key=scores.__getitem__)
        if scores[best][0]:
            raise MeshError(
                f"boundary facet {f} does not lie on any chart arc (distance {scores[best][2]:.3g})"
            )
        arcs[f] = best
    return replace(mesh, facet_arc=_frozen(arcs), chart=chart)


def _arc_distance(arc, x, y, t):
    lo, hi = sorted(arc.t_range)
    if not (lo - 1e-12 <= t[0] <= hi + 1e-12):
        ends = arc.point(np.array([lo, hi]))
        return float(np.min(np.linalg.norm(ends - x, axis=1)))
    return float(np.linalg.norm(y[0] - x))


def _point_arc_distance(arc, x):
    y, t = arc.project(x)
    return _arc_distance(arc, x, y, t)


def curve_boundary(mesh: Mesh, chart: BoundaryChart | None, g: int) -> Mesh:
    """Return a copy of ``mesh`` with order-``g`` geometry.

    On every facet lying on a curved arc, the g - 1 interior edge nodes at
    equal reference spacing are moved to the nearest point of the arc. The
    edge displacement is written D(t) = t (1 - t) R(t) with R of degree
    g - 2 and extended into the owning cell as
    lam_a lam_b R((1 + lam_b - lam_a) / 2). The argument of R is linear, so
    the extension has degree g, vanishes on the other two edges, and its
    k-th derivatives scale like h^k, which keeps the mapped spaces
    optimal. All other cells are affine. The result depends only on the
    straight vertices, hence repeated application is exact.
    """
    if g < 1:
        raise ValueError("geometry order g must be >= 1")
    if chart is None:
        chart = mesh.chart
    if chart is not None and mesh.chart is not chart:
        mesh = attach_chart(mesh, chart) if np.any(mesh.facet_arc < 0) else replace(mesh, chart=chart)
    V, C = mesh.vertices, mesh.cells
    nodes = affine_geometry_nodes(V, C, g)
    curved = np.zeros(mesh.n_cells, dtype=bool)

    if g > 1 and chart is not None:
        ref = lagrange_basis(g).nodes
        lam = np.column_stack([1 - ref.sum(1), ref[:, 0], ref[:, 1]])
        s = np.arange(1, g) / g
        for f in range(mesh.n_facets):
            arc_id = mesh.facet_arc[f]
            if arc_id < 0 or not chart.arcs[arc_id].curved:
                continue
            arc = chart.arcs[arc_id]
            c, e = mesh.facet_cell[f], mesh.facet_local[f]
            la, lb = reference.EDGES[e]
            pa, pb = V[C[c, la]], V[C[c, lb]]
            chord = pa + s[:, None] * (pb - pa)
            try:
                on_arc, _ = arc.project(chord)
            except ProjectionError as exc:
                raise ProjectionError(f"facet {f}: {exc}") from exc
            ratio = (on_arc - chord) / (s * (1 - s))[:, None]
            tstar = 0.5 * (1 + lam[:, lb] - lam[:, la])
            L = _lagrange_1d(s, tstar)  # (nnodes, g - 1)
            nodes[c] += (lam[:, la] * lam[:, lb])[:, None] * (L @ ratio)
            curved[c] = True

        if curved.any():
            rule = quad_triangle(min(20, 2 * g + 4))
            pts = np.concatenate([rule.points, ref])
            tr = evaluate_transform(nodes[curved], pts, g)
            bad = np.flatnonzero(curved)[np.any(tr.detJ <= 0, axis=1)]
            if len(bad):
                raise MeshError(
                    f"nonpositive Jacobian after curving cells {bad[:10].tolist()}; mesh too coarse"
                )
    return replace(
        mesh,
        geometry_order=g,
        geometry_nodes=_frozen(nodes),
        curved=_frozen(curved),
    )


def _lagrange_1d(knots: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Values of the 1D Lagrange cardinal functions on ``knots`` at ``t``."""
    out = np.ones((len(t), len(knots)))
    for j, kj in enumerate(knots):
        for m, km in enumerate(knots):
            if m != j:
                out[:, j] *= (t - km) / (kj - km)
    return out
