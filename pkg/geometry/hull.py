"""Convex-hull containment tests for point sets of any affine dimension."""

import numpy as np
from scipy.spatial import ConvexHull

from config.settings import HULL_TOLERANCE


def _affine_frame(vertices: np.ndarray, tol: float):
    origin = vertices.mean(axis=0)
    centered = vertices - origin
    if centered.size == 0:
        return origin, np.zeros((0, vertices.shape[1]))
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    scale = max(1.0, float(np.abs(vertices).max()))
    rank = int(np.sum(s > tol * scale))
    return origin, vt[:rank]


def contains(vertices, queries, tol: float = HULL_TOLERANCE) -> np.ndarray:
    """Boolean mask: which queries lie inside or on the hull of vertices.

    Degenerate hulls (a point, a segment, a planar set in 3D) are handled by
    testing in the affine subspace spanned by the vertices.
    """
    vertices = np.atleast_2d(np.asarray(vertices, dtype=float))
    queries = np.atleast_2d(np.asarray(queries, dtype=float))
    origin, basis = _affine_frame(vertices, tol)

    local_q = (queries - origin) @ basis.T
    off_plane = queries - origin - local_q @ basis
    inside = np.linalg.norm(off_plane, axis=1) <= tol

    rank = basis.shape[0]
    if rank == 0:
        return inside
    local_v = (vertices - origin) @ basis.T
    if rank == 1:
        lo, hi = local_v[:, 0].min(), local_v[:, 0].max()
        return inside & (local_q[:, 0] >= lo - tol) & (local_q[:, 0] <= hi + tol)

    hull = ConvexHull(local_v)
    # equations rows are [unit normal, offset] with normal . x + offset <= 0 inside
    margins = local_q @ hull.equations[:, :-1].T + hull.equations[:, -1]
    return inside & np.all(margins <= tol, axis=1)
