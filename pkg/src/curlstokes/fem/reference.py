"""Reference triangle conventions.

Local edge ``e`` is opposite local vertex ``e`` and is oriented from its
lower to its higher local vertex index.
"""
import numpy as np

VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
EDGES = ((1, 2), (0, 2), (0, 1))
OUTWARD_NORMALS = np.array([[1.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
OUTWARD_NORMALS /= np.linalg.norm(OUTWARD_NORMALS, axis=1)[:, None]
VERTICES.setflags(write=False)
OUTWARD_NORMALS.setflags(write=False)


def edge_direction(e: int) -> np.ndarray:
    a, b = EDGES[e]
    return VERTICES[b] - VERTICES[a]


def edge_points(e: int, s: np.ndarray) -> np.ndarray:
    """Reference points at parameters ``s`` in [0, 1] along local edge ``e``."""
    a, _ = EDGES[e]
    return VERTICES[a] + np.asarray(s).reshape(-1, 1) * edge_direction(e)
