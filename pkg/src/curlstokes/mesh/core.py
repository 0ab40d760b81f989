"""Triangular mesh with oriented edges, tagged boundary facets and per-cell
polynomial geometry maps."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from ..fem import reference
from ..fem.lagrange import lagrange_basis
from .chart import TAGS, BoundaryChart


class MeshError(ValueError):
    pass


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _frozen(a, dtype=None):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray  # (nv, 2)
    cells: np.ndarray  # (nc, 3), counterclockwise
    edges: np.ndarray  # (ne, 2), sorted vertex pairs
    cell_edges: np.ndarray  # (nc, 3), local edge e opposite local vertex e
    edge_signs: np.ndarray  # (nc, 3), +1 when local and global directions agree
    edge_cells: np.ndarray  # (ne, 2), second entry -1 on the boundary
    facet_edge: np.ndarray  # (nf,)
    facet_cell: np.ndarray  # (nf,)
    facet_local: np.ndarray  # (nf,) local edge index in facet_cell
    facet_tag: np.ndarray  # (nf,) str, one of TAGS
    facet_arc: np.ndarray  # (nf,) index into chart.arcs, -1 if unknown
    geometry_order: int = 1
    geometry_nodes: np.ndarray = None  # (nc, (g+1)(g+2)/2, 2)
    curved: np.ndarray = None  # (nc,) bool
    chart: BoundaryChart | None = field(default=None, repr=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_facets(self) -> int:
        return len(self.facet_edge)

    def facets_with_tag(self, tag: str) -> np.ndarray:
        return np.flatnonzero(self.facet_tag == tag)

    def with_tags(self, tags_by_arc: dict[str, str]) -> "Mesh":
        """Copy with boundary tags reassigned per chart arc name."""
        if self.chart is None:
            raise MeshError("retagging by arc name needs a boundary chart")
        tag = self.facet_tag.copy()
        for name, t in tags_by_arc.items():
            if t not in TAGS:
                raise MeshError(f"unknown boundary tag {t!r}")
            tag[self.facet_arc == self.chart.arc_index(name)] = t
        return replace(self, facet_tag=_frozen(tag))

    def cell_diameters(self) -> np.ndarray:
        P = self.vertices[self.cells]
        d = [np.linalg.norm(P[:, i] - P[:, j], axis=1) for i, j in ((0, 1), (1, 2), (0, 2))]
        return np.max(d, axis=0)

    def facet_lengths(self) -> np.ndarray:
        a, b = self.edges[self.facet_edge].T
        return np.linalg.norm(self.vertices[a] - self.vertices[b], axis=1)

    def quality(self) -> np.ndarray:
        """Inradius / circumradius per (straight) cell; 0.5 for equilateral."""
        P = self.vertices[self.cells]
        a = np.linalg.norm(P[:, 1] - P[:, 2], axis=1)
        b = np.linalg.norm(P[:, 0] - P[:, 2], axis=1)
        c = np.linalg.norm(P[:, 0] - P[:, 1], axis=1)
        area = 0.5 * np.abs(_cross(P[:, 1] - P[:, 0], P[:, 2] - P[:, 0]))
        r = 2 * area / (a + b + c)
        R = a * b * c / (4 * area)
        return r / R

    def to_json(self) -> str:
        """Debug dump of topology and tags."""
        return json.dumps(
            {
                "vertices": self.vertices.tolist(),
                "cells": self.cells.tolist(),
                "edges": self.edges.tolist(),
                "cell_edges": self.cell_edges.tolist(),
                "edge_signs": self.edge_signs.tolist(),
                "facets": [
                    {"edge": int(e), "cell": int(c), "local": int(l), "tag": str(t), "arc": int(a)}
                    for e, c, l, t, a in zip(
                        self.facet_edge, self.facet_cell, self.facet_local, self.facet_tag, self.facet_arc
                    )
                ],
                "geometry_order": self.geometry_order,
                "n_curved_cells": int(np.count_nonzero(self.curved)),
            }
        )


def affine_geometry_nodes(vertices: np.ndarray, cells: np.ndarray, order: int) -> np.ndarray:
    ref = lagrange_basis(order).nodes
    P = vertices[cells]
    lam = np.column_stack([1 - ref.sum(1), ref[:, 0], ref[:, 1]])
    return np.einsum("nk,cki->cni", lam, P)


def build_mesh(
    vertices,
    cells,
    boundary: dict[tuple[int, int], tuple[str, int]] | None = None,
    chart: BoundaryChart | None = None,
    default_tag: str = "slip",
) -> Mesh:
    """Assemble topology from vertex coordinates and triangles.

    ``boundary`` maps an (unordered) vertex pair to (tag, arc index). Every
    listed pair must be a boundary edge; unlisted boundary edges get
    ``default_tag``.
    """
    V = np.asarray(vertices, dtype=float)
    C = np.array(cells, dtype=np.int64)
    if C.ndim != 2 or C.shape[1] != 3:
        raise MeshError("cells must be vertex index triples")
    P = V[C]
    area2 = _cross(P[:, 1] - P[:, 0], P[:, 2] - P[:, 0])
    if np.any(np.abs(area2) < 1e-300):
        raise MeshError("degenerate cell")
    flip = area2 < 0
    C[flip] = C[flip][:, [0, 2, 1]]

    local = np.array(reference.EDGES)  # (3, 2)
    pairs = C[:, local]  # (nc, 3, 2)
    sorted_pairs = np.sort(pairs, axis=-1).reshape(-1, 2)
    edges, inverse, counts = np.unique(sorted_pairs, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    if np.any(counts > 2):
        raise MeshError("non-manifold edge shared by more than two cells")
    cell_edges = inverse.reshape(-1, 3)
    signs = np.where(pairs[..., 0] < pairs[..., 1], 1, -1)

    ne = len(edges)
    edge_cells = -np.ones((ne, 2), dtype=np.int64)
    owner_local = np.zeros(ne, dtype=np.int64)
    flat_cells = np.repeat(np.arange(len(C)), 3)
    flat_local = np.tile(np.arange(3), len(C))
    order = np.argsort(inverse, kind="stable")
    inv_sorted = inverse[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = inv_sorted[1:] != inv_sorted[:-1]
    edge_cells[inv_sorted[first], 0] = flat_cells[order][first]
    owner_local[inv_sorted[first]] = flat_local[order][first]
    edge_cells[inv_sorted[~first], 1] = flat_cells[order][~first]

    bnd_edges = np.flatnonzero(counts == 1)
    facet_cell = edge_cells[bnd_edges, 0]
    facet_local = owner_local[bnd_edges]
    tags = np.full(len(bnd_edges), default_tag, dtype=object)
    arcs = -np.ones(len(bnd_edges), dtype=np.int64)
    if boundary:
        pos = {tuple(e): i for i, e in enumerate(edges[bnd_edges].tolist())}
        for (a, b), (tag, arc) in boundary.items():
            key = (min(a, b), max(a, b))
            if key not in pos:
                raise MeshError(f"boundary edge {key} is not incident to exactly one triangle")
            tags[pos[key]] = tag
            arcs[pos[key]] = arc
    bad = [t for t in set(tags.tolist()) if t not in TAGS]
    if bad:
        raise MeshError(f"unknown boundary tags {bad}")

    mesh = Mesh(
        vertices=_frozen(V),
        cells=_frozen(C),
        edges=_frozen(edges),
        cell_edges=_frozen(cell_edges),
        edge_signs=_frozen(signs),
        edge_cells=_frozen(edge_cells),
        facet_edge=_frozen(bnd_edges),
        facet_cell=_frozen(facet_cell),
        facet_local=_frozen(facet_local),
        facet_tag=_frozen(tags.astype(str)),
        facet_arc=_frozen(arcs),
        geometry_order=1,
        geometry_nodes=_frozen(affine_geometry_nodes(V, C, 1)),
        curved=_frozen(np.zeros(len(C), dtype=bool)),
        chart=chart,
    )
    check_topology(mesh)
    return mesh


def check_topology(mesh: Mesh) -> None:
    """Raise MeshError if an edge-sharing or tagging invariant fails."""
    counts = np.bincount(mesh.cell_edges.ravel(), minlength=mesh.n_edges)
    if np.any((counts < 1) | (counts > 2)):
        raise MeshError("edge shared by neither one nor two cells")
    n_int = int(np.count_nonzero(counts == 2))
    if 3 * mesh.n_cells != 2 * n_int + mesh.n_facets:
        raise MeshError("edge incidence count mismatch")
    a, b = mesh.edges.T
    if np.any(a >= b):
        raise MeshError("edges must be stored as sorted vertex pairs")
    if not set(mesh.facet_tag.tolist()) <= set(TAGS):
        raise MeshError("facet with unknown tag")
