"""Legacy VTK and CSV writers."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..assembly.dofmap import DofMap
from ..fem.lagrange import lagrange_basis
from ..fem.nedelec import nedelec_basis
from ..fem.transform import evaluate_transform
from ..mesh.core import Mesh
from .errors import NORMS


def subdivision(level: int) -> tuple[np.ndarray, np.ndarray]:
    """Lattice points (i/n, j/n) of the reference triangle and the n^2
    counterclockwise subtriangles, n = ``level``."""
    n = level
    index = {}
    pts = []
    for j in range(n + 1):
        for i in range(n + 1 - j):
            index[i, j] = len(pts)
            pts.append((i / n, j / n))
    tris = []
    for j in range(n):
        for i in range(n - j):
            tris.append((index[i, j], index[i + 1, j], index[i, j + 1]))
            if i + j < n - 1:
                tris.append((index[i + 1, j], index[i + 1, j + 1], index[i, j + 1]))
    return np.array(pts), np.array(tris)


def export_vtk(path, mesh: Mesh, vdm: DofMap, pdm: DofMap, u, p, level: int | None = None) -> Path:
    """Write u_h and p_h sampled on a ``level``-fold subdivision of every
    cell (default: the geometry order) as an ASCII unstructured grid."""
    level = level or mesh.geometry_order
    ref, tris = subdivision(level)
    tr = evaluate_transform(mesh.geometry_nodes, ref, mesh.geometry_order)
    vhat = nedelec_basis(vdm.degree).values(ref)
    coef = u[vdm.cell_dofs] * vdm.cell_signs
    vel = np.einsum("cqij,qbj,cb->cqi", tr.JinvT, vhat, coef)
    pres = lagrange_basis(pdm.degree).values(ref) @ p[pdm.cell_dofs].T  # (nq, nc)

    nc, nq = mesh.n_cells, len(ref)
    points = tr.x.reshape(-1, 2)
    conn = (tris[None] + nq * np.arange(nc)[:, None, None]).reshape(-1, 3)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        fh.write("# vtk DataFile Version 3.0\ncurl-curl Stokes solution\nASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {len(points)} double\n")
        np.savetxt(fh, np.column_stack([points, np.zeros(len(points))]), fmt="%.16e")
        fh.write(f"CELLS {len(conn)} {4 * len(conn)}\n")
        np.savetxt(fh, np.column_stack([np.full(len(conn), 3), conn]), fmt="%d")
        fh.write(f"CELL_TYPES {len(conn)}\n")
        np.savetxt(fh, np.full(len(conn), 5), fmt="%d")
        fh.write(f"POINT_DATA {len(points)}\nVECTORS velocity double\n")
        np.savetxt(fh, np.column_stack([vel.reshape(-1, 2), np.zeros(len(points))]), fmt="%.16e")
        fh.write("SCALARS pressure double 1\nLOOKUP_TABLE default\n")
        np.savetxt(fh, pres.T.reshape(-1), fmt="%.16e")
    return path


def write_convergence_csv(path, widths, errors, rates) -> Path:
    """One ``error`` row per width, then one ``rate`` row per consecutive
    pair; the h column of a rate row is the finer width."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "h", *NORMS])
        for h, e in zip(widths, errors):
            w.writerow(["error", repr(float(h)), *(repr(float(e[n])) for n in NORMS)])
        for h, r in zip(widths[1:], rates):
            w.writerow(["rate", repr(float(h)), *(repr(float(r[n])) for n in NORMS)])
    return path


def write_profile_csv(path, gamma, velocity) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    velocity = np.asarray(velocity)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["gamma", "ux", "uy", "magnitude"])
        for g, (ux, uy) in zip(gamma, velocity):
            w.writerow([repr(float(g)), repr(float(ux)), repr(float(uy)), repr(float(np.hypot(ux, uy)))])
    return path


def read_csv(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))
