"""Built-in straight-sided meshes for the benchmark domains.

Ellipse, annulus and half-disk meshes are built from concentric rings of
nodes spaced by arc length, stitched ring to ring. The square is a uniform
right-diagonal grid. The square with a circular hole is a graded O-grid
whose facets on the hole have size close to ``h``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .chart import DIRICHLET, SLIP, BoundaryChart, CircleArc, EllipseArc, Segment
from .core import Mesh, MeshError, _cross, build_mesh

DOMAINS = ("ellipse", "annulus", "unit_square", "half_disk", "square_minus_disk")
MIN_FACETS_PER_LOOP = 8

_DEFAULTS = {
    "ellipse": {"a": 1.0, "b": 0.5},
    "annulus": {"r_in": 1.0, "r_out": 4.0},
    "unit_square": {},
    "half_disk": {"r": 1.0},
    "square_minus_disk": {"L": 8.0, "r": 1.0},
}


@dataclass(frozen=True)
class DomainSpec:
    kind: str
    h: float
    g: int = 1
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in DOMAINS:
            raise ValueError(f"unknown domain {self.kind!r}; choose from {DOMAINS}")
        if not self.h > 0:
            raise ValueError("mesh width h must be positive")
        if self.g < 1:
            raise ValueError("geometry order g must be >= 1")

    def param(self, name):
        return self.params.get(name, _DEFAULTS[self.kind][name])


def generate_domain(spec: DomainSpec) -> tuple[Mesh, BoundaryChart]:
    """Straight mesh of the requested domain and its boundary chart."""
    builder = {
        "ellipse": _ellipse,
        "annulus": _annulus,
        "unit_square": _unit_square,
        "half_disk": _half_disk,
        "square_minus_disk": _square_minus_disk,
    }[spec.kind]
    vertices, cells, boundary, chart = builder(spec)
    mesh = build_mesh(vertices, cells, boundary, chart)
    _check_resolution(mesh, chart)
    return mesh, chart


def _check_resolution(mesh: Mesh, chart: BoundaryChart) -> None:
    for loop in chart.loops:
        n = int(np.isin(mesh.facet_arc, loop).sum())
        if n < MIN_FACETS_PER_LOOP:
            names = [chart.arcs[i].name for i in loop]
            raise MeshError(
                f"mesh width too large: boundary component {names} has {n} facets "
                f"(< {MIN_FACETS_PER_LOOP})"
            )


def _arclength_params(arc: EllipseArc, fractions: np.ndarray, table: int = 20001) -> np.ndarray:
    """Parameters at arc-length fractions via a tabulated cumulative length.

    Only the spacing depends on this table; points themselves lie exactly on
    the arc whatever parameter is chosen.
    """
    if arc.a == arc.b:
        return arc.t0 + fractions * (arc.t1 - arc.t0)
    t = np.linspace(arc.t0, arc.t1, table)
    sp = arc.speed(t)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (sp[1:] + sp[:-1]) * np.abs(np.diff(t)))])
    return np.interp(fractions * cum[-1], cum, t)


def _stitch(verts, inner: list[int], outer: list[int]) -> list:
    """Triangulate the strip between two node rows running in the same
    direction, always closing the quad across its shorter diagonal."""
    if len(inner) == 1:
        c = inner[0]
        return [(c, outer[j], outer[j + 1]) for j in range(len(outer) - 1)]
    tris = []
    a = b = 0
    while a < len(inner) - 1 or b < len(outer) - 1:
        if a == len(inner) - 1:
            advance_outer = True
        elif b == len(outer) - 1:
            advance_outer = False
        else:
            d_out = np.linalg.norm(verts[inner[a]] - verts[outer[b + 1]])
            d_in = np.linalg.norm(verts[inner[a + 1]] - verts[outer[b]])
            advance_outer = d_out <= d_in
        if advance_outer:
            tris.append((inner[a], outer[b], outer[b + 1]))
            b += 1
        else:
            tris.append((inner[a], outer[b], inner[a + 1]))
            a += 1
    return tris


def _min_quality(verts, tris) -> float:
    P = verts[np.array(tris)]
    a = np.linalg.norm(P[:, 1] - P[:, 2], axis=1)
    b = np.linalg.norm(P[:, 0] - P[:, 2], axis=1)
    c = np.linalg.norm(P[:, 0] - P[:, 1], axis=1)
    area = 0.5 * np.abs(_cross(P[:, 1] - P[:, 0], P[:, 2] - P[:, 0]))
    return float(np.min(8 * area**2 / (a * b * c * (a + b + c))))


def _closed_rows(rows):
    """Close periodic rows by repeating the first node at fraction 1."""
    out = []
    for idx, frac in rows:
        if len(idx) == 1:
            out.append((idx, frac))
        else:
            out.append((idx + idx[:1], np.append(frac, 1.0)))
    return out


def _ellipse(spec: DomainSpec):
    a, b = spec.param("a"), spec.param("b")
    h = spec.h
    arc = EllipseArc((0.0, 0.0), a, b, 0.0, 2 * np.pi, name="boundary", tag=SLIP)
    chart = BoundaryChart((arc,), ((0,),))
    perimeter = arc.length()
    M = max(1, math.ceil(0.5 * (a + b) / h))
    verts = [np.zeros(2)]
    rows = [([0], np.zeros(1))]
    for i in range(1, M + 1):
        r = i / M
        n = max(6, math.ceil(perimeter * r / h))
        frac = np.arange(n) / n
        t = _arclength_params(arc, frac)
        pts = np.column_stack([r * a * np.cos(t), r * b * np.sin(t)])
        if i == M:
            pts = arc.point(t)
        start = len(verts)
        verts.extend(pts)
        rows.append((list(range(start, start + n)), frac))
    rows = _closed_rows(rows)
    cells = []
    V = np.array(verts)
    for (ii, _), (io, _) in zip(rows[:-1], rows[1:]):
        cells += _stitch(V, ii, io)
    outer = rows[-1][0]
    boundary = {(outer[j], outer[j + 1]): (arc.tag, 0) for j in range(len(outer) - 1)}
    return np.array(verts), cells, boundary, chart


def _annulus(spec: DomainSpec):
    r_in, r_out = spec.param("r_in"), spec.param("r_out")
    h = spec.h
    inner = CircleArc((0, 0), r_in, 2 * np.pi, 0.0, name="inner", tag=DIRICHLET)
    outer = CircleArc((0, 0), r_out, 0.0, 2 * np.pi, name="outer", tag=SLIP)
    chart = BoundaryChart((inner, outer), ((0,), (1,)))
    M = max(1, math.ceil((r_out - r_in) / h))
    verts, rows = [], []
    for i in range(M + 1):
        r = r_in + (r_out - r_in) * i / M
        n = math.ceil(2 * np.pi * r / h)
        frac = np.arange(n) / n
        th = 2 * np.pi * frac
        start = len(verts)
        verts.extend(np.column_stack([r * np.cos(th), r * np.sin(th)]))
        rows.append((list(range(start, start + n)), frac))
    rows = _closed_rows(rows)
    cells = []
    V = np.array(verts)
    for (ii, _), (io, _) in zip(rows[:-1], rows[1:]):
        cells += _stitch(V, ii, io)
    boundary = {}
    ring0, ringM = rows[0][0], rows[-1][0]
    for j in range(len(ring0) - 1):
        boundary[(ring0[j], ring0[j + 1])] = (inner.tag, 0)
    for j in range(len(ringM) - 1):
        boundary[(ringM[j], ringM[j + 1])] = (outer.tag, 1)
    return np.array(verts), cells, boundary, chart


def _unit_square(spec: DomainSpec):
    n = math.ceil(2.0 / spec.h)
    s = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(s, s, indexing="xy")
    verts = np.column_stack([X.ravel(), Y.ravel()])

    def idx(i, j):
        return j * (n + 1) + i

    cells = []
    for j in range(n):
        for i in range(n):
            v00, v10, v01, v11 = idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1)
            cells += [(v00, v10, v11), (v00, v11, v01)]
    arcs = (
        Segment((0.0, 0.0), (1.0, 0.0), name="bottom", tag=SLIP),
        Segment((1.0, 0.0), (1.0, 1.0), name="right", tag=SLIP),
        Segment((1.0, 1.0), (0.0, 1.0), name="lid", tag=DIRICHLET),
        Segment((0.0, 1.0), (0.0, 0.0), name="left", tag=SLIP),
    )
    chart = BoundaryChart(arcs, ((0, 1, 2, 3),))
    boundary = {}
    for i in range(n):
        boundary[(idx(i, 0), idx(i + 1, 0))] = (SLIP, 0)
        boundary[(idx(n, i), idx(n, i + 1))] = (SLIP, 1)
        boundary[(idx(i, n), idx(i + 1, n))] = (DIRICHLET, 2)
        boundary[(idx(0, i), idx(0, i + 1))] = (SLIP, 3)
    return verts, cells, boundary, chart


def _half_disk(spec: DomainSpec):
    """Lower half disk {|x| <= r, y <= 0}; the flat top carries the lid."""
    R, h = spec.param("r"), spec.h
    arc = CircleArc((0, 0), R, np.pi, 2 * np.pi, name="arc", tag=SLIP)
    lid = Segment((R, 0.0), (-R, 0.0), name="lid", tag=DIRICHLET)
    chart = BoundaryChart((arc, lid), ((0, 1),))
    M = max(1, math.ceil(R / h))
    verts = [np.zeros(2)]
    rows = [([0], np.zeros(1))]
    for i in range(1, M + 1):
        r = R * i / M
        n = max(2, math.ceil(np.pi * r / h))
        frac = np.arange(n + 1) / n
        th = np.pi + np.pi * frac
        pts = np.column_stack([r * np.cos(th), r * np.sin(th)])
        pts[0] = (-r, 0.0)
        pts[-1] = (r, 0.0)
        start = len(verts)
        verts.extend(pts)
        rows.append((list(range(start, start + n + 1)), frac))
    cells = []
    V = np.array(verts)
    for (ii, _), (io, _) in zip(rows[:-1], rows[1:]):
        cells += _stitch(V, ii, io)
    boundary = {}
    ringM = rows[-1][0]
    for j in range(len(ringM) - 1):
        boundary[(ringM[j], ringM[j + 1])] = (arc.tag, 0)
    left = [row[0][0] for row in rows]
    right = [row[0][-1] for row in rows]
    for line in (left, right):
        for p, q in zip(line[:-1], line[1:]):
            boundary[(p, q)] = (lid.tag, 1)
    return np.array(verts), cells, boundary, chart


def _square_minus_disk(spec: DomainSpec):
    L, R, h = spec.param("L"), spec.param("r"), spec.h
    half = 0.5 * L
    N = 8 * math.ceil(2 * np.pi * R / (8 * h))
    q = 1.0 + 2 * np.pi / N
    M = max(2, math.ceil(math.log(half / R) / math.log(q)))
    th = 2 * np.pi * np.arange(N) / N
    c, s = np.cos(th), np.sin(th)
    inner = R * np.column_stack([c, s])
    outer = half * np.column_stack([c, s]) / np.maximum(np.abs(c), np.abs(s))[:, None]
    outer[np.isclose(np.abs(outer), half, atol=1e-12)] = np.sign(
        outer[np.isclose(np.abs(outer), half, atol=1e-12)]
    ) * half
    frac = (q ** np.arange(M + 1) - 1.0) / (q**M - 1.0)
    verts = (inner[None] + frac[:, None, None] * (outer - inner)[None]).reshape(-1, 2)

    def idx(i, j):
        return i * N + (j % N)

    cells = []
    for i in range(M):
        for j in range(N):
            a, b, cc, d = idx(i, j), idx(i, j + 1), idx(i + 1, j), idx(i + 1, j + 1)
            split_ad = [(a, b, d), (a, d, cc)]
            split_bc = [(a, b, cc), (b, d, cc)]
            q_ad, q_bc = _min_quality(verts, split_ad), _min_quality(verts, split_bc)
            if abs(q_ad - q_bc) < 1e-9:
                # tie: pick by side of the y axis so the mesh stays mirror symmetric
                cells += split_ad if np.cos(2 * np.pi * (j + 0.5) / N) > 0 else split_bc
            else:
                cells += split_ad if q_ad > q_bc else split_bc
    arcs = (
        CircleArc((0, 0), R, 2 * np.pi, 0.0, name="cylinder", tag=SLIP),
        Segment((-half, -half), (half, -half), name="bottom", tag=DIRICHLET),
        Segment((half, -half), (half, half), name="right", tag=DIRICHLET),
        Segment((half, half), (-half, half), name="top", tag=DIRICHLET),
        Segment((-half, half), (-half, -half), name="left", tag=DIRICHLET),
    )
    chart = BoundaryChart(arcs, ((0,), (1, 2, 3, 4)))
    boundary = {}
    for j in range(N):
        boundary[(idx(0, j), idx(0, j + 1))] = (SLIP, 0)
        mid = 0.5 * (verts[idx(M, j)] + verts[idx(M, j + 1)])
        if np.isclose(mid[1], -half):
            side = 1
        elif np.isclose(mid[0], half):
            side = 2
        elif np.isclose(mid[1], half):
            side = 3
        else:
            side = 4
        boundary[(idx(M, j), idx(M, j + 1))] = (DIRICHLET, side)
    return verts, cells, boundary, chart
