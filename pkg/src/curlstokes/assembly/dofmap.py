"""Global numbering for first-kind Nedelec and Lagrange spaces."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..fem.nedelec import nedelec_basis
from ..mesh.core import Mesh


@dataclass(frozen=True)
class DofMap:
    family: str  # "nedelec" or "lagrange"
    degree: int
    cell_dofs: np.ndarray  # (nc, nloc) global index of each local dof
    cell_signs: np.ndarray  # (nc, nloc) +-1, global = sign * local basis
    n_dofs: int
    entity_dofs: dict  # entity kind -> (n_entities, per-entity) global indices

    @property
    def n_local(self) -> int:
        return self.cell_dofs.shape[1]


def nedelec_dofmap(mesh: Mesh, k: int) -> DofMap:
    """Edge moment j of edge e -> e * k + j; interior dofs of cell c follow
    all edge dofs as n_edges * k + c * k(k-1) + i."""
    basis = nedelec_basis(k)
    ne, nc = mesh.n_edges, mesh.n_cells
    j = np.arange(k)
    edge_part = mesh.cell_edges[:, :, None] * k + j  # (nc, 3, k)
    ni = basis.n_interior_dofs
    interior = ne * k + np.arange(nc)[:, None] * ni + np.arange(ni)
    cell_dofs = np.concatenate([edge_part.reshape(nc, 3 * k), interior], axis=1)
    signs = basis.orientation_signs(mesh.edge_signs)
    return DofMap(
        "nedelec",
        k,
        cell_dofs,
        signs,
        ne * k + nc * ni,
        {"edge": np.arange(ne * k).reshape(ne, k), "cell": interior},
    )


def lagrange_dofmap(mesh: Mesh, m: int) -> DofMap:
    """Vertices first, then m - 1 nodes per edge ordered along the global
    edge direction, then cell interiors."""
    nv, ne, nc = mesh.n_vertices, mesh.n_edges, mesh.n_cells
    nen = m - 1
    ni = (m - 1) * (m - 2) // 2
    edge_nodes = nv + np.arange(ne)[:, None] * nen + np.arange(nen)  # (ne, nen)
    interior = nv + ne * nen + np.arange(nc)[:, None] * ni + np.arange(ni)
    parts = [mesh.cells]
    for e in range(3):
        nodes = edge_nodes[mesh.cell_edges[:, e]]
        flip = mesh.edge_signs[:, e] < 0
        nodes = np.where(flip[:, None], nodes[:, ::-1], nodes)
        parts.append(nodes)
    parts.append(interior)
    cell_dofs = np.concatenate(parts, axis=1)
    assert cell_dofs.shape[1] == (m + 1) * (m + 2) // 2
    return DofMap(
        "lagrange",
        m,
        cell_dofs,
        np.ones(cell_dofs.shape),
        nv + ne * nen + nc * ni,
        {"vertex": np.arange(nv)[:, None], "edge": edge_nodes, "cell": interior},
    )


