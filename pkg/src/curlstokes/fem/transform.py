"""Polynomial geometry maps and the covariant Piola transform."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import reference
from .lagrange import lagrange_basis


class SingularJacobianError(ValueError):
    pass


@dataclass(frozen=True)
class ElementTransform:
    """Geometry of a batch of cells at a set of reference points.

    Arrays carry leading shape (ncells, npts).
    """

    x: np.ndarray  # (..., 2)
    J: np.ndarray  # (..., 2, 2), J[i, j] = dx_i / dxhat_j
    detJ: np.ndarray
    JinvT: np.ndarray  # (..., 2, 2)


def evaluate_transform(nodes: np.ndarray, ref_pts: np.ndarray, order: int) -> ElementTransform:
    """Evaluate the order-``order`` map with node coordinates ``nodes``
    (ncells, nnodes, 2) at reference points (npts, 2) shared by all cells,
    or per-cell points (ncells, npts, 2)."""
    basis = lagrange_basis(order)
    if ref_pts.ndim == 2:
        N = basis.values(ref_pts)
        dN = basis.gradients(ref_pts)
        x = np.einsum("pn,cni->cpi", N, nodes)
        J = np.einsum("pnj,cni->cpij", dN, nodes)
    else:
        flat = ref_pts.reshape(-1, 2)
        N = basis.values(flat).reshape(*ref_pts.shape[:2], -1)
        dN = basis.gradients(flat).reshape(*ref_pts.shape[:2], -1, 2)
        x = np.einsum("cpn,cni->cpi", N, nodes)
        J = np.einsum("cpnj,cni->cpij", dN, nodes)
    return _finish(x, J)


def _finish(x: np.ndarray, J: np.ndarray) -> ElementTransform:
    detJ = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
    if np.any(np.abs(detJ) < 1e-300):
        raise SingularJacobianError("singular geometry Jacobian")
    JinvT = np.empty_like(J)
    JinvT[..., 0, 0] = J[..., 1, 1]
    JinvT[..., 0, 1] = -J[..., 1, 0]
    JinvT[..., 1, 0] = -J[..., 0, 1]
    JinvT[..., 1, 1] = J[..., 0, 0]
    JinvT /= detJ[..., None, None]
    return ElementTransform(x, J, detJ, JinvT)


def affine_transform(J: np.ndarray, b=(0.0, 0.0)) -> ElementTransform:
    """A single-point transform for a constant Jacobian; handy for checks."""
    J = np.asarray(J, dtype=float).reshape(1, 1, 2, 2)
    return _finish(np.asarray(b, dtype=float).reshape(1, 1, 2), J)


def covariant_piola(transform: ElementTransform, ref_value, ref_curl):
    """Map reference values v^ and curls to physical ones:
    v = J^{-T} v^, curl v = curl^ v^ / det J.

    ``ref_value`` broadcasts as (..., nbasis, 2) against transform leading
    shape (..., ) with the basis axis inserted before the vector axis.
    """
    if np.any(transform.detJ <= 0):
        raise SingularJacobianError("covariant Piola needs det J > 0")
    ref_value = np.asarray(ref_value, dtype=float)
    ref_curl = np.asarray(ref_curl, dtype=float)
    value = np.einsum("...ij,...bj->...bi", transform.JinvT, ref_value)
    curl = ref_curl / transform.detJ[..., None]
    return value, curl


@dataclass(frozen=True)
class EdgeTransform:
    """Geometry on boundary facets at edge quadrature points, (nf, nq)."""

    ref_pts: np.ndarray  # (nf, nq, 2)
    cell: ElementTransform
    tangent: np.ndarray  # unit, domain on the left
    normal: np.ndarray  # unit outward
    ds: np.ndarray  # arclength weights (include quadrature weight)
    dxds: np.ndarray  # d x / d s along the local edge direction
    orientation: np.ndarray  # (nf,) +1 if local edge direction has the domain on its left


def evaluate_edge_transform(nodes, order, local_edges, s, w) -> EdgeTransform:
    """``nodes`` (nf, nnodes, 2) geometry nodes of each facet's cell,
    ``local_edges`` (nf,), edge rule (s, w) on [0, 1]."""
    local_edges = np.asarray(local_edges)
    ref = np.stack([reference.edge_points(e, s) for e in range(3)])  # (3, nq, 2)
    dirs = np.stack([reference.edge_direction(e) for e in range(3)])
    ref_pts = ref[local_edges]
    cell = evaluate_transform(nodes, ref_pts, order)
    dxds = np.einsum("fqij,fj->fqi", cell.J, dirs[local_edges])
    nhat = reference.OUTWARD_NORMALS[local_edges]
    n = np.einsum("fqij,fj->fqi", cell.JinvT, nhat)
    n /= np.linalg.norm(n, axis=-1, keepdims=True)
    speed = np.linalg.norm(dxds, axis=-1)
    t_local = dxds / speed[..., None]
    t = np.stack([-n[..., 1], n[..., 0]], axis=-1)
    orient = np.sign(np.einsum("fqi,fqi->fq", t_local, t)[:, 0])
    return EdgeTransform(ref_pts, cell, t, n, speed * w[None, :], dxds, orient)
