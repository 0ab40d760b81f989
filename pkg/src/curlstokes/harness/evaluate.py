"""Point location in curved meshes and pointwise evaluation of discrete fields.

Candidate cells come from a k-d tree on mapped cell centroids; the geometry
map of each candidate is inverted by damped Newton iteration with the
reference point clamped to the triangle.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from ..assembly.dofmap import DofMap
from ..fem.lagrange import lagrange_basis
from ..fem.nedelec import nedelec_basis
from ..fem.transform import evaluate_transform
from ..mesh.core import Mesh

NEWTON_TOL = 1e-12
NEWTON_MAXITER = 50
INSIDE_TOL = 1e-9


class PointLocationError(ValueError):
    pass


def _clamp_reference(p: np.ndarray) -> np.ndarray:
    """Closest point of the reference triangle, by clipping then pulling
    back across the hypotenuse."""
    p = np.clip(p, 0.0, 1.0)
    excess = p.sum(-1) - 1.0
    over = excess > 0
    p[over] -= 0.5 * excess[over, None]
    return np.clip(p, 0.0, 1.0)


def _violation(p: np.ndarray) -> np.ndarray:
    return np.maximum.reduce([-p[..., 0], -p[..., 1], p.sum(-1) - 1.0, np.zeros(p.shape[:-1])])


@dataclass
class Located:
    cells: np.ndarray  # (n,)
    ref: np.ndarray  # (n, 2)
    distance: np.ndarray  # (n,) |F(ref) - x|, nonzero only for points outside the mesh


class PointLocator:
    def __init__(self, mesh: Mesh, candidates: int = 12):
        self.mesh = mesh
        self.order = mesh.geometry_order
        centroid = np.full((1, 2), 1.0 / 3.0)
        self._centroids = evaluate_transform(mesh.geometry_nodes, centroid, self.order).x[:, 0]
        self._tree = cKDTree(self._centroids)
        self._k = min(candidates, mesh.n_cells)

    def invert(self, cells: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Reference points of ``x`` (n, 2) in ``cells`` (n,), and the
        final physical mismatch."""
        nodes = self.mesh.geometry_nodes[cells]
        ref = np.full((len(cells), 2), 1.0 / 3.0)
        active = np.arange(len(cells))
        for _ in range(NEWTON_MAXITER):
            if not len(active):
                break
            nd, xa, ra = nodes[active], x[active], ref[active]
            tr = evaluate_transform(nd, ra[:, None], self.order)
            r = tr.x[:, 0] - xa
            step = np.einsum("nji,nj->ni", tr.JinvT[:, 0], r)
            trial = _clamp_reference(ra - step)
            # damping: halve steps that do not reduce the residual
            rnorm = np.linalg.norm(r, axis=1)
            for _ in range(8):
                rt = evaluate_transform(nd, trial[:, None], self.order).x[:, 0] - xa
                worse = np.linalg.norm(rt, axis=1) > rnorm
                if not worse.any():
                    break
                trial[worse] = 0.5 * (trial[worse] + ra[worse])
            moved = np.linalg.norm(trial - ra, axis=1)
            ref[active] = trial
            active = active[moved >= NEWTON_TOL]
        mismatch = evaluate_transform(nodes, ref[:, None], self.order).x[:, 0] - x
        return ref, np.linalg.norm(mismatch, axis=1)

    def locate(self, x, outside_tol: float = 1e-6) -> Located:
        """Owning cell and reference coordinates of each point.

        Points outside the discrete domain by at most ``outside_tol`` (as
        happens for samples on a curved boundary) are attached to the
        nearest boundary point of the best candidate.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        _, cand = self._tree.query(x, k=self._k)
        cand = np.asarray(cand).reshape(len(x), -1)
        n, kc = cand.shape
        ref, dist = self.invert(cand.ravel(), np.repeat(x, kc, axis=0))
        ref, dist = ref.reshape(n, kc, 2), dist.reshape(n, kc)
        score = np.where(_violation(ref) <= INSIDE_TOL, dist, np.inf)
        best = np.argmin(np.where(np.isfinite(score), score, dist + 1.0), axis=1)
        rows = np.arange(n)
        d = dist[rows, best]
        if np.any(d > outside_tol):
            bad = int(np.argmax(d))
            raise PointLocationError(f"point {x[bad].tolist()} lies outside the mesh (distance {d[bad]:.3g})")
        return Located(cand[rows, best], ref[rows, best], d)


def evaluate_velocity(mesh: Mesh, vdm: DofMap, u: np.ndarray, loc: Located) -> np.ndarray:
    """u_h at located points, (n, 2)."""
    basis = nedelec_basis(vdm.degree)
    vhat = basis.values(loc.ref)  # (n, nb, 2)
    tr = evaluate_transform(mesh.geometry_nodes[loc.cells], loc.ref[:, None], mesh.geometry_order)
    coef = u[vdm.cell_dofs[loc.cells]] * vdm.cell_signs[loc.cells]
    return np.einsum("nij,nbj,nb->ni", tr.JinvT[:, 0], vhat, coef)


def evaluate_pressure(pdm: DofMap, p: np.ndarray, loc: Located) -> np.ndarray:
    q = lagrange_basis(pdm.degree).values(loc.ref)  # (n, nb)
    return np.einsum("nb,nb->n", q, p[pdm.cell_dofs[loc.cells]])
