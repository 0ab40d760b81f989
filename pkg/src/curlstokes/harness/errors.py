"""Error norms against exact fields and observed convergence rates."""
from __future__ import annotations

import numpy as np

from ..assembly.dofmap import DofMap
from ..assembly.forms import (
    cell_quadrature,
    default_exactness,
    evaluate_scalar,
    evaluate_vector,
    facet_quadrature,
    pressure_basis,
    velocity_basis,
)
from ..fem.quadrature import MAX_EXACTNESS
from ..mesh.core import Mesh

NORMS = ("u_l2", "u_hcurl", "u_sharp", "p_l2", "p_h1")


def error_exactness(mesh: Mesh, k: int) -> int:
    return min(MAX_EXACTNESS, max(2 * k + 4, default_exactness(mesh, k) + 2))


def compute_errors(mesh: Mesh, vdm: DofMap, pdm: DofMap, u_h, p_h, exact) -> dict:
    """All five norms of (u - u_h, p - p_h).

    ``exact`` provides u(x), curl_u(x), p(x), grad_p(x). The exact pressure
    is shifted to zero mean on the discrete domain, matching p_h.
    The #-norm adds the boundary L2 norm of the tangential trace error.
    """
    k = vdm.degree
    cq = cell_quadrature(mesh, error_exactness(mesh, k))
    v, c = velocity_basis(cq, vdm)
    uh = np.einsum("cqbi,cb->cqi", v, u_h[vdm.cell_dofs])
    wh = np.einsum("cqb,cb->cq", c, u_h[vdm.cell_dofs])
    eu = evaluate_vector(exact.u, cq.x) - uh
    ew = evaluate_scalar(exact.curl_u, cq.x) - wh
    u_l2 = np.einsum("cq,cqi,cqi->", cq.dx, eu, eu)
    curl2 = np.einsum("cq,cq,cq->", cq.dx, ew, ew)

    q, gq = pressure_basis(cq, pdm)
    ph = np.einsum("qb,cb->cq", q, p_h[pdm.cell_dofs])
    gph = np.einsum("cqbi,cb->cqi", gq, p_h[pdm.cell_dofs])
    pe = evaluate_scalar(exact.p, cq.x)
    area = cq.dx.sum()
    pe = pe - np.sum(cq.dx * pe) / area
    ph = ph - np.sum(cq.dx * ph) / area
    ep = pe - ph
    eg = evaluate_vector(exact.grad_p, cq.x) - gph
    p_l2 = np.einsum("cq,cq,cq->", cq.dx, ep, ep)
    p_semi = np.einsum("cq,cqi,cqi->", cq.dx, eg, eg)

    fq = facet_quadrature(mesh, vdm, np.arange(mesh.n_facets), error_exactness(mesh, k))
    trace_h = np.einsum("fqb,fb->fq", fq.trace, u_h[fq.dofs])
    trace = np.einsum("fqi,fqi->fq", evaluate_vector(exact.u, fq.x), fq.edge.tangent)
    bnd = np.sum(fq.ds * (trace - trace_h) ** 2)

    return {
        "u_l2": float(np.sqrt(u_l2)),
        "u_hcurl": float(np.sqrt(u_l2 + curl2)),
        "u_sharp": float(np.sqrt(u_l2 + curl2 + bnd)),
        "p_l2": float(np.sqrt(p_l2)),
        "p_h1": float(np.sqrt(p_l2 + p_semi)),
    }


def observed_rates(widths, errors) -> np.ndarray:
    """log(e_i / e_{i+1}) / log(h_i / h_{i+1}) for consecutive widths."""
    h = np.asarray(widths, dtype=float)
    e = np.asarray(errors, dtype=float)
    return np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:])
