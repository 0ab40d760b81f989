"""Cell and facet quadrature data and the global bilinear forms."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..fem import reference
from ..fem.lagrange import lagrange_basis
from ..fem.nedelec import nedelec_basis
from ..fem.quadrature import MAX_EXACTNESS, quad_edge, quad_triangle
from ..fem.transform import EdgeTransform, ElementTransform, evaluate_edge_transform, evaluate_transform
from ..mesh.core import Mesh, MeshError
from .dofmap import DofMap


class IncompatibleSpacesError(ValueError):
    pass


def default_exactness(mesh: Mesh, k: int) -> int:
    """2k + 2 on straight meshes, 2k + 2g once any cell is curved."""
    g = mesh.geometry_order if np.any(mesh.curved) else 1
    return min(MAX_EXACTNESS, 2 * k + 2 * g)


def boundary_exactness(mesh: Mesh, k: int) -> int:
    return min(MAX_EXACTNESS, 2 * k + 2 * mesh.geometry_order)


@dataclass(frozen=True)
class CellQuadrature:
    points: np.ndarray  # (nq, 2) reference points
    weights: np.ndarray  # (nq,)
    transform: ElementTransform  # (nc, nq)
    dx: np.ndarray  # (nc, nq) physical weights

    @property
    def x(self) -> np.ndarray:
        return self.transform.x


def cell_quadrature(mesh: Mesh, exactness: int) -> CellQuadrature:
    rule = quad_triangle(exactness)
    tr = evaluate_transform(mesh.geometry_nodes, rule.points, mesh.geometry_order)
    if np.any(tr.detJ <= 0):
        raise MeshError("nonpositive geometry Jacobian at a quadrature point")
    return CellQuadrature(rule.points, rule.weights, tr, tr.detJ * rule.weights)


def velocity_basis(cq: CellQuadrature, vdm: DofMap):
    """Signed physical Nedelec values (nc, nq, nb, 2) and curls (nc, nq, nb)."""
    basis = nedelec_basis(vdm.degree)
    vhat, chat = basis.values(cq.points), basis.curls(cq.points)
    tr = cq.transform
    values = np.einsum("cqij,qbj->cqbi", tr.JinvT, vhat) * vdm.cell_signs[:, None, :, None]
    curls = chat[None] / tr.detJ[..., None] * vdm.cell_signs[:, None, :]
    return values, curls


def pressure_basis(cq: CellQuadrature, pdm: DofMap):
    """Lagrange values (nq, nb) and physical gradients (nc, nq, nb, 2)."""
    basis = lagrange_basis(pdm.degree)
    grads = np.einsum("cqij,qbj->cqbi", cq.transform.JinvT, basis.gradients(cq.points))
    return basis.values(cq.points), grads


def _scatter(row_dofs, col_dofs, local, shape) -> sp.csr_matrix:
    nc, nr = row_dofs.shape
    ncol = col_dofs.shape[1]
    rows = np.broadcast_to(row_dofs[:, :, None], (nc, nr, ncol)).ravel()
    cols = np.broadcast_to(col_dofs[:, None, :], (nc, nr, ncol)).ravel()
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=shape).tocsr()


def _scatter_vector(dofs, local, n) -> np.ndarray:
    return np.bincount(dofs.ravel(), weights=local.ravel(), minlength=n)


def assemble_mass(mesh: Mesh, vdm: DofMap, cq: CellQuadrature | None = None) -> sp.csr_matrix:
    """L2 Gram matrix of the velocity space."""
    cq = cq or cell_quadrature(mesh, default_exactness(mesh, vdm.degree))
    v, _ = velocity_basis(cq, vdm)
    local = np.einsum("cq,cqai,cqbi->cab", cq.dx, v, v)
    return _scatter(vdm.cell_dofs, vdm.cell_dofs, local, (vdm.n_dofs, vdm.n_dofs))


def assemble_curl_curl(mesh: Mesh, vdm: DofMap, cq: CellQuadrature | None = None) -> sp.csr_matrix:
    """(curl u, curl v)."""
    cq = cq or cell_quadrature(mesh, default_exactness(mesh, vdm.degree))
    _, c = velocity_basis(cq, vdm)
    local = np.einsum("cq,cqa,cqb->cab", cq.dx, c, c)
    return _scatter(vdm.cell_dofs, vdm.cell_dofs, local, (vdm.n_dofs, vdm.n_dofs))


def assemble_b(
    mesh: Mesh, vdm: DofMap, pdm: DofMap, cq: CellQuadrature | None = None, allow_incompatible=False
) -> sp.csr_matrix:
    """B[j, i] = (phi_i, grad q_j), shape (n_p, n_u).

    The pairing needs grad Q_h inside V_h, i.e. equal degrees. Other pairs
    are only meaningful for stability experiments and must be requested
    explicitly.
    """
    if pdm.degree != vdm.degree and not allow_incompatible:
        raise IncompatibleSpacesError(
            f"pressure degree {pdm.degree} with Nedelec degree {vdm.degree}: "
            "gradients of the pressure space are not contained in the velocity space"
        )
    k = max(vdm.degree, pdm.degree)
    cq = cq or cell_quadrature(mesh, default_exactness(mesh, k))
    v, _ = velocity_basis(cq, vdm)
    _, gq = pressure_basis(cq, pdm)
    local = np.einsum("cq,cqai,cqbi->cab", cq.dx, gq, v)
    return _scatter(pdm.cell_dofs, vdm.cell_dofs, local, (pdm.n_dofs, vdm.n_dofs))


def assemble_lagrange_stiffness(mesh: Mesh, pdm: DofMap, cq: CellQuadrature | None = None):
    cq = cq or cell_quadrature(mesh, default_exactness(mesh, pdm.degree))
    _, gq = pressure_basis(cq, pdm)
    local = np.einsum("cq,cqai,cqbi->cab", cq.dx, gq, gq)
    return _scatter(pdm.cell_dofs, pdm.cell_dofs, local, (pdm.n_dofs, pdm.n_dofs))


def assemble_lagrange_mass(mesh: Mesh, pdm: DofMap, cq: CellQuadrature | None = None):
    cq = cq or cell_quadrature(mesh, default_exactness(mesh, pdm.degree))
    q, _ = pressure_basis(cq, pdm)
    local = np.einsum("cq,qa,qb->cab", cq.dx, q, q)
    return _scatter(pdm.cell_dofs, pdm.cell_dofs, local, (pdm.n_dofs, pdm.n_dofs))


def pressure_integrals(mesh: Mesh, pdm: DofMap, cq: CellQuadrature | None = None) -> np.ndarray:
    """m_j = integral of q_j over the domain."""
    cq = cq or cell_quadrature(mesh, default_exactness(mesh, pdm.degree))
    q, _ = pressure_basis(cq, pdm)
    return _scatter_vector(pdm.cell_dofs, np.einsum("cq,qa->ca", cq.dx, q), pdm.n_dofs)


def evaluate_vector(func, x: np.ndarray) -> np.ndarray:
    """Call a vector field on points of any leading shape."""
    flat = x.reshape(-1, 2)
    return np.asarray(func(flat), dtype=float).reshape(*x.shape[:-1], 2)


def evaluate_scalar(func, *args) -> np.ndarray:
    shape = args[0].shape[:-1]
    flat = [a.reshape(-1, a.shape[-1]) for a in args]
    return np.asarray(func(*flat), dtype=float).reshape(shape)


def load_vector(mesh: Mesh, vdm: DofMap, f, cq: CellQuadrature | None = None) -> np.ndarray:
    """(f, phi_i) for a vector source f(x)."""
    cq = cq or cell_quadrature(mesh, default_exactness(mesh, vdm.degree))
    v, _ = velocity_basis(cq, vdm)
    fx = evaluate_vector(f, cq.x)
    return _scatter_vector(vdm.cell_dofs, np.einsum("cq,cqi,cqai->ca", cq.dx, fx, v), vdm.n_dofs)


@dataclass(frozen=True)
class FacetQuadrature:
    facets: np.ndarray  # (nf,)
    s: np.ndarray  # (nq,) parameters along the local edge direction
    edge: EdgeTransform
    dofs: np.ndarray  # (nf, nb) global velocity dofs of the owning cell
    trace: np.ndarray  # (nf, nq, nb) tangential trace t . phi
    curls: np.ndarray  # (nf, nq, nb)
    values: np.ndarray  # (nf, nq, nb, 2)

    @property
    def x(self) -> np.ndarray:
        return self.edge.cell.x

    @property
    def ds(self) -> np.ndarray:
        return self.edge.ds

    @property
    def lengths(self) -> np.ndarray:
        return self.edge.ds.sum(axis=1)


def facet_quadrature(mesh: Mesh, vdm: DofMap, facets, exactness: int | None = None) -> FacetQuadrature:
    facets = np.asarray(facets, dtype=np.int64)
    rule = quad_edge(exactness if exactness is not None else boundary_exactness(mesh, vdm.degree))
    s, w = rule.points[:, 0], rule.weights
    cells = mesh.facet_cell[facets]
    local = mesh.facet_local[facets]
    et = evaluate_edge_transform(mesh.geometry_nodes[cells], mesh.geometry_order, local, s, w)
    if np.any(et.cell.detJ <= 0):
        raise MeshError("nonpositive geometry Jacobian on a boundary facet")
    basis = nedelec_basis(vdm.degree)
    ref = np.stack([reference.edge_points(e, s) for e in range(3)])
    vhat = np.stack([basis.values(ref[e]) for e in range(3)])[local]  # (nf, nq, nb, 2)
    chat = np.stack([basis.curls(ref[e]) for e in range(3)])[local]
    signs = vdm.cell_signs[cells][:, None, :]
    values = np.einsum("fqij,fqbj->fqbi", et.cell.JinvT, vhat) * signs[..., None]
    curls = chat / et.cell.detJ[..., None] * signs
    trace = np.einsum("fqbi,fqi->fqb", values, et.tangent)
    return FacetQuadrature(facets, s, et, vdm.cell_dofs[cells], trace, curls, values)


def _facet_matrix(fq: FacetQuadrature, local, n) -> sp.csr_matrix:
    return _scatter(fq.dofs, fq.dofs, local, (n, n))


def assemble_robin(mesh: Mesh, vdm: DofMap, alpha, fq: FacetQuadrature | None = None) -> sp.csr_matrix:
    """<alpha u_t, v_t> over the facets of ``fq`` (default: all slip facets).

    ``alpha`` is a WeingartenField (alpha = 2W), an array (nf, nq), a
    scalar, or a callable alpha(x).
    """
    from ..curvature import WeingartenField

    if fq is None:
        fq = facet_quadrature(mesh, vdm, mesh.facets_with_tag("slip"))
    if isinstance(alpha, WeingartenField):
        if alpha.values.shape != fq.trace.shape[:2] or not np.array_equal(alpha.facets, fq.facets):
            raise ValueError("curvature field does not match the slip facet quadrature")
        a = 2.0 * alpha.values
    elif alpha is None:
        raise ValueError("missing alpha on slip facets")
    elif callable(alpha):
        a = evaluate_scalar(alpha, fq.x)
    else:
        a = np.broadcast_to(np.asarray(alpha, dtype=float), fq.trace.shape[:2])
    local = np.einsum("fq,fq,fqa,fqb->fab", fq.ds, a, fq.trace, fq.trace)
    return _facet_matrix(fq, local, vdm.n_dofs)


def assemble_nitsche(mesh: Mesh, vdm: DofMap, facets=None, C_w=None, u_D=None, fq=None):
    """Symmetric Nitsche terms for the tangential Dirichlet condition:

        -<omega(u), v_t> - <u_t, omega(v)> + C_w / h_F <u_t, v_t>

    with the matching data terms on the right. h_F is the facet length.
    Returns (matrix, rhs).
    """
    if C_w is None:
        raise ValueError("Nitsche penalty C_w missing")
    if C_w <= 0:
        raise ValueError("Nitsche penalty C_w must be positive")
    if fq is None:
        facets = mesh.facets_with_tag("dirichlet") if facets is None else facets
        fq = facet_quadrature(mesh, vdm, facets)
    pen = (C_w / fq.lengths)[:, None] * fq.ds
    local = (
        -np.einsum("fq,fqa,fqb->fab", fq.ds, fq.trace, fq.curls)
        - np.einsum("fq,fqa,fqb->fab", fq.ds, fq.curls, fq.trace)
        + np.einsum("fq,fqa,fqb->fab", pen, fq.trace, fq.trace)
    )
    K = _facet_matrix(fq, local, vdm.n_dofs)
    rhs = np.zeros(vdm.n_dofs)
    if u_D is not None:
        ut = np.einsum("fqi,fqi->fq", evaluate_vector(u_D, fq.x), fq.edge.tangent)
        loc = -np.einsum("fq,fq,fqa->fa", fq.ds, ut, fq.curls) + np.einsum("fq,fq,fqa->fa", pen, ut, fq.trace)
        rhs = _scatter_vector(fq.dofs, loc, vdm.n_dofs)
    return K, rhs


def boundary_pressure_load(mesh: Mesh, pdm: DofMap, facets, z, exactness: int) -> np.ndarray:
    """<z, q_j> over the given facets for scalar data z(x, n)."""
    facets = np.asarray(facets, dtype=np.int64)
    if not len(facets):
        return np.zeros(pdm.n_dofs)
    rule = quad_edge(exactness)
    s, w = rule.points[:, 0], rule.weights
    cells = mesh.facet_cell[facets]
    local = mesh.facet_local[facets]
    et = evaluate_edge_transform(mesh.geometry_nodes[cells], mesh.geometry_order, local, s, w)
    basis = lagrange_basis(pdm.degree)
    ref = np.stack([reference.edge_points(e, s) for e in range(3)])
    q = np.stack([basis.values(ref[e]) for e in range(3)])[local]  # (nf, nq, nb)
    zx = evaluate_scalar(z, et.cell.x, et.normal)
    loc = np.einsum("fq,fq,fqb->fb", et.ds, zx, q)
    return _scatter_vector(pdm.cell_dofs[cells], loc, pdm.n_dofs)


def tangential_load(fq: FacetQuadrature, g, n: int) -> np.ndarray:
    """<g, v_t> over the facets of ``fq`` for scalar data g(x, n)."""
    gx = evaluate_scalar(g, fq.x, fq.edge.normal)
    return _scatter_vector(fq.dofs, np.einsum("fq,fq,fqa->fa", fq.ds, gx, fq.trace), n)
