"""
Finite metric-space primitives: points, point clouds, Euclidean and
Hausdorff distances.

Points are plain 1-D numpy arrays.  A :class:`PointCloud` is an immutable,
deduplicated ``(n, dim)`` array kept in lexicographic order.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DimensionError

DEDUP_TOL = 1e-9


def as_point(p):
    """Return ``p`` as a finite 1-D float array."""
    arr = np.atleast_1d(np.asarray(p, dtype=float))
    if arr.ndim != 1:
        raise ValueError("a point must be a 1-D sequence of coordinates")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point coordinates must be finite")
    return arr


def distance(p, q):
    """Euclidean distance between two points of equal dimension."""
    p, q = as_point(p), as_point(q)
    if p.shape != q.shape:
        raise DimensionError(f"dimension mismatch: {p.size} vs {q.size}")
    return float(np.linalg.norm(p - q))


def pairwise_distances(X, Y=None):
    """Dense Euclidean distance matrix between the rows of ``X`` and ``Y``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = X if Y is None else np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[1] != Y.shape[1]:
        raise DimensionError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    diff = X[:, None, :] - Y[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def lexsort_rows(points):
    """Indices that sort the rows of ``points`` lexicographically."""
    points = np.asarray(points)
    if points.shape[0] == 0:
        return np.zeros(0, dtype=int)
    return np.lexsort(points.T[::-1])


def cluster_representatives(points, tol=DEDUP_TOL):
    """Group rows of ``points`` lying within ``tol`` of a representative.

    Rows are visited in lexicographic order; each unclaimed row becomes a
    representative and claims every unclaimed row within ``tol``.  So the
    lexicographically smallest row of each group is kept.

    Returns
    -------
    reps : ndarray of int
        Indices (into ``points``) of the representatives, in lexicographic order.
    labels : ndarray of int
        For every row, the position in ``reps`` of its representative.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = points.shape[0]
    labels = np.full(n, -1, dtype=int)
    order = lexsort_rows(points)
    if tol <= 0:
        # exact duplicates only
        reps = []
        prev = None
        for idx in order:
            if prev is not None and np.array_equal(points[idx], points[prev]):
                labels[idx] = labels[prev]
            else:
                labels[idx] = len(reps)
                reps.append(idx)
            prev = idx
        return np.asarray(reps, dtype=int), labels
    tree = cKDTree(points)
    reps = []
    for idx in order:
        if labels[idx] >= 0:
            continue
        k = len(reps)
        reps.append(idx)
        for nb in tree.query_ball_point(points[idx], tol):
            if labels[nb] < 0:
                labels[nb] = k
    return np.asarray(reps, dtype=int), labels


@dataclass(frozen=True, eq=False)
class PointCloud:
    """A finite, deduplicated set of points in Euclidean space.

    Construct through :meth:`from_points`, which normalizes the input.
    """

    points: np.ndarray
    dedup_tolerance: float = DEDUP_TOL

    @classmethod
    def from_points(cls, points, dedup_tolerance=DEDUP_TOL):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2:
            raise ValueError("points must form a 2-D array (n, dim)")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        if dedup_tolerance < 0:
            raise ValueError("dedup_tolerance must be >= 0")
        if pts.shape[0]:
            reps, _ = cluster_representatives(pts, dedup_tolerance)
            pts = pts[reps]
        pts = np.ascontiguousarray(pts)
        pts.setflags(write=False)
        return cls(pts, float(dedup_tolerance))

    def __len__(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    def diameter(self):
        if len(self) < 2:
            return 0.0
        return float(pairwise_distances(self.points).max())


def _as_cloud_array(S):
    if isinstance(S, PointCloud):
        return S.points
    arr = np.asarray(S, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    return arr


def directed_hausdorff(S, T):
    """``max_{s in S} min_{t in T} |s - t|``."""
    S, T = _as_cloud_array(S), _as_cloud_array(T)
    if S.shape[0] == 0 or T.shape[0] == 0:
        raise ValueError("hausdorff distance of an empty point set")
    if S.shape[1] != T.shape[1]:
        raise DimensionError(f"dimension mismatch: {S.shape[1]} vs {T.shape[1]}")
    d, _ = cKDTree(T).query(S)
    return float(np.max(d))


def hausdorff_distance(S, T):
    """Symmetric Hausdorff distance between two nonempty point sets."""
    return max(directed_hausdorff(S, T), directed_hausdorff(T, S))
