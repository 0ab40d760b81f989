"""Canonical interpolants and the discrete gradient operator."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..fem.lagrange import lagrange_basis
from ..fem.nedelec import nedelec_basis
from ..fem.transform import evaluate_transform
from ..mesh.core import Mesh
from .dofmap import DofMap
from .forms import evaluate_scalar, evaluate_vector


def _first_occurrence(cell_dofs: np.ndarray, local: np.ndarray, n: int) -> np.ndarray:
    """Global vector from per-cell values, taking each dof from the first
    cell that owns it (values on shared entities agree)."""
    dofs, idx = np.unique(cell_dofs.ravel(), return_index=True)
    out = np.zeros(n)
    out[dofs] = local.ravel()[idx]
    return out


def interpolate_velocity(mesh: Mesh, vdm: DofMap, func) -> np.ndarray:
    """Apply the Nedelec degrees of freedom to a physical field: the
    reference moments act on the covariant pullback J^T v(x(xhat))."""
    basis = nedelec_basis(vdm.degree)
    tr = evaluate_transform(mesh.geometry_nodes, basis.dof_points, mesh.geometry_order)
    v = evaluate_vector(func, tr.x)
    vhat = np.einsum("cpji,cpj->cpi", tr.J, v)
    local = basis.apply_dofs(vhat) * vdm.cell_signs
    return _first_occurrence(vdm.cell_dofs, local, vdm.n_dofs)


def interpolate_lagrange(mesh: Mesh, pdm: DofMap, func) -> np.ndarray:
    """Nodal interpolant of a scalar function func(x)."""
    basis = lagrange_basis(pdm.degree)
    tr = evaluate_transform(mesh.geometry_nodes, basis.nodes, mesh.geometry_order)
    local = evaluate_scalar(func, tr.x)
    return _first_occurrence(pdm.cell_dofs, local, pdm.n_dofs)


def discrete_gradient(mesh: Mesh, vdm: DofMap, pdm: DofMap) -> sp.csr_matrix:
    """D with grad(sum_j c_j q_j) = sum_i (D c)_i phi_i exactly.

    Gradients pull back like Nedelec fields, so D is assembled from the
    reference matrix of Nedelec moments of the reference gradients.
    """
    if pdm.degree != vdm.degree:
        raise ValueError("discrete gradient needs equal Nedelec and Lagrange degrees")
    nb = nedelec_basis(vdm.degree)
    grads = lagrange_basis(pdm.degree).gradients(nb.dof_points)  # (npts, np, 2)
    Dhat = np.einsum("dpi,pbi->db", nb.dof_tensor, grads)
    Dhat[np.abs(Dhat) < 1e-13] = 0.0
    local = vdm.cell_signs[:, :, None] * Dhat[None]
    rows = np.broadcast_to(vdm.cell_dofs[:, :, None], local.shape).ravel()
    cols = np.broadcast_to(pdm.cell_dofs[:, None, :], local.shape).ravel()
    vals = local.ravel()
    keep = vals != 0
    rows, cols, vals = rows[keep], cols[keep], vals[keep]
    key = rows * pdm.n_dofs + cols
    _, idx = np.unique(key, return_index=True)
    return sp.csr_matrix((vals[idx], (rows[idx], cols[idx])), shape=(vdm.n_dofs, pdm.n_dofs))
