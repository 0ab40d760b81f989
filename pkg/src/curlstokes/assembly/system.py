"""Boundary-condition specification and full saddle-point assembly."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from ..curvature import WeingartenField, weingarten_field
from ..fem.quadrature import MAX_EXACTNESS
from ..mesh.core import Mesh
from .dofmap import DofMap, lagrange_dofmap, nedelec_dofmap
from .forms import (
    CellQuadrature,
    FacetQuadrature,
    assemble_b,
    assemble_curl_curl,
    assemble_nitsche,
    assemble_robin,
    boundary_pressure_load,
    cell_quadrature,
    default_exactness,
    evaluate_vector,
    facet_quadrature,
    load_vector,
    pressure_integrals,
    tangential_load,
)


class BoundaryConditionError(ValueError):
    pass


@dataclass(frozen=True)
class SlipBC:
    """omega + alpha u_t = g on slip facets, u . n = z.

    ``alpha`` None means alpha = 2W with W from ``curvature``; otherwise a
    scalar or callable alpha(x) is used as given.
    """

    curvature: str = "geometric"
    alpha: float | Callable | None = None
    g: Callable | None = None  # g(x, n) -> tangential data


@dataclass(frozen=True)
class DirichletBC:
    """Tangential data imposed by Nitsche's method; u_D . n enters via z."""

    u_D: Callable
    C_w: float | None = None  # default 10 k^2


@dataclass(frozen=True)
class BCSpec:
    slip: SlipBC | None = None
    dirichlet: DirichletBC | None = None
    z: Callable | None = None  # z(x, n) on every facet; default u_D . n / 0

    def validate(self, mesh: Mesh) -> None:
        for tag, cond in (("slip", self.slip), ("dirichlet", self.dirichlet)):
            if len(mesh.facets_with_tag(tag)) and cond is None:
                raise BoundaryConditionError(f"mesh has {tag} facets but no {tag} condition is given")


def default_penalty(k: int) -> float:
    return 10.0 * k**2


@dataclass
class SystemBlocks:
    mesh: Mesh
    vdm: DofMap
    pdm: DofMap
    A: sp.csr_matrix
    B: sp.csr_matrix
    F: np.ndarray
    G: np.ndarray
    m: np.ndarray  # integrals of the pressure basis
    cq: CellQuadrature
    parts: dict = field(default_factory=dict)  # named matrix contributions
    weingarten: WeingartenField | None = None
    slip_quadrature: FacetQuadrature | None = None

    @property
    def n_u(self) -> int:
        return self.vdm.n_dofs

    @property
    def n_p(self) -> int:
        return self.pdm.n_dofs


def assemble_rhs(
    mesh: Mesh, vdm: DofMap, pdm: DofMap, bc: BCSpec, f: Callable | None = None, cq=None, fq=None
) -> tuple[np.ndarray, np.ndarray]:
    """F_i = (f, phi_i) + <g, t . phi_i>_slip + Nitsche data terms and
    G_j = <z, q_j> over the boundary."""
    bc.validate(mesh)
    k = vdm.degree
    cq = cq or cell_quadrature(mesh, default_exactness(mesh, k))
    F = load_vector(mesh, vdm, f, cq) if f is not None else np.zeros(vdm.n_dofs)
    slip = mesh.facets_with_tag("slip")
    if len(slip) and bc.slip.g is not None:
        fq = fq or facet_quadrature(mesh, vdm, slip)
        F = F + tangential_load(fq, bc.slip.g, vdm.n_dofs)
    dirichlet = mesh.facets_with_tag("dirichlet")
    if len(dirichlet):
        _, rhs = assemble_nitsche(mesh, vdm, dirichlet, _penalty(bc, k), bc.dirichlet.u_D)
        F = F + rhs
    # sum_j G_j = <z, 1> must vanish for compatible data; the highest edge
    # rule keeps its quadrature error far below the constraint tolerance
    G = _normal_load(mesh, pdm, bc, MAX_EXACTNESS)
    return F, G


def _penalty(bc: BCSpec, k: int) -> float:
    return bc.dirichlet.C_w if bc.dirichlet.C_w is not None else default_penalty(k)


def assemble_system(mesh: Mesh, k: int, bc: BCSpec, f: Callable | None = None) -> SystemBlocks:
    """Assemble A = curl-curl + Robin + Nitsche, B and the loads F, G."""
    bc.validate(mesh)
    vdm, pdm = nedelec_dofmap(mesh, k), lagrange_dofmap(mesh, k)
    cq = cell_quadrature(mesh, default_exactness(mesh, k))
    parts = {"curl_curl": assemble_curl_curl(mesh, vdm, cq)}

    W = fq = None
    slip = mesh.facets_with_tag("slip")
    if len(slip):
        fq = facet_quadrature(mesh, vdm, slip)
        if bc.slip.alpha is None:
            W = weingarten_field(mesh, slip, fq.s, bc.slip.curvature)
            alpha = W
        else:
            alpha = bc.slip.alpha
        parts["robin"] = assemble_robin(mesh, vdm, alpha, fq)

    dirichlet = mesh.facets_with_tag("dirichlet")
    if len(dirichlet):
        parts["nitsche"], _ = assemble_nitsche(mesh, vdm, dirichlet, _penalty(bc, k))

    A = sum(parts.values()).tocsr()
    B = assemble_b(mesh, vdm, pdm, cq)
    F, G = assemble_rhs(mesh, vdm, pdm, bc, f, cq, fq)
    m = pressure_integrals(mesh, pdm, cq)
    return SystemBlocks(mesh, vdm, pdm, A, B, F, G, m, cq, parts, W, fq)


def _normal_load(mesh: Mesh, pdm: DofMap, bc: BCSpec, exactness: int) -> np.ndarray:
    if bc.z is not None:
        return boundary_pressure_load(mesh, pdm, np.arange(mesh.n_facets), bc.z, exactness)
    dirichlet = mesh.facets_with_tag("dirichlet")
    if not len(dirichlet):
        return np.zeros(pdm.n_dofs)
    u_D = bc.dirichlet.u_D

    def z(x, n):
        return np.einsum("pi,pi->p", evaluate_vector(u_D, x), n)

    return boundary_pressure_load(mesh, pdm, dirichlet, z, exactness)
