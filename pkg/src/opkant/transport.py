"""
Exact Wasserstein-1 (Kantorovich) distance between finitely supported
measures.

The solver is a transportation simplex: a north-west-corner start on
lexicographically sorted atoms (least-cost start above one dimension), MODI
potentials on the spanning-tree basis,
Dantzig pricing, and Bland's rule once a run of degenerate pivots grows
long (cycling can only happen inside such a run, and Bland's rule cannot
cycle, so the method terminates).  On the real line the sorted north-west corner is already the monotone
coupling, so one-dimensional problems finish without pivoting.

A 1-Lipschitz certificate is recovered from the sink potentials by the
c-transform ``f(z) = min_j (d(z, y_j) - v_j)``; it is 1-Lipschitz on the whole
space and attains the optimum.
"""

import itertools
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import InstanceTooLargeError, MassMismatchError
from .metric import (DEDUP_TOL, PointCloud, as_point, cluster_representatives,
                     lexsort_rows, pairwise_distances)

PRUNE_TOL = 1e-14
MASS_TOL = 1e-9
# consecutive degenerate pivots before pricing falls back to Bland's rule
BLAND_STREAK = 50


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Nonnegative weights on a deduplicated point cloud."""

    support: PointCloud
    weights: np.ndarray

    @classmethod
    def from_atoms(cls, points, weights, dedup_tol=DEDUP_TOL):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        w = np.asarray(weights, dtype=float).ravel()
        if pts.shape[0] != w.size:
            raise ValueError(f"{pts.shape[0]} points but {w.size} weights")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        if w.size == 0:
            raise ValueError("a measure needs at least one atom")
        reps, labels = cluster_representatives(pts, dedup_tol)
        merged = np.zeros(reps.size)
        np.add.at(merged, labels, w)
        merged.setflags(write=False)
        cloud = PointCloud.from_points(pts[reps], 0.0)
        return cls(PointCloud(cloud.points, float(dedup_tol)), merged)

    @classmethod
    def dirac(cls, x):
        return cls.from_atoms(as_point(x)[None, :], [1.0])

    @classmethod
    def uniform(cls, points, dedup_tol=DEDUP_TOL):
        pts = np.asarray(points, dtype=float)
        n = pts.shape[0]
        return cls.from_atoms(pts, np.full(n, 1.0 / n), dedup_tol)

    def __len__(self):
        return len(self.support)

    @property
    def points(self):
        return self.support.points

    @property
    def dim(self):
        return self.support.dim

    @property
    def total_mass(self):
        return float(self.weights.sum())

    def is_probability(self, tol=1e-12):
        return abs(self.total_mass - 1.0) <= tol

    def integrate(self, f):
        return float(np.dot(self.weights, f(self.points)))


@dataclass(frozen=True, eq=False)
class DualPotential:
    """Values of a 1-Lipschitz function on a finite set of points."""

    points: np.ndarray
    values: np.ndarray

    def lipschitz_defect(self, cost=None):
        """Largest violation of ``|f(x) - f(y)| <= d(x, y)`` over all pairs."""
        D = pairwise_distances(self.points) if cost is None else cost
        gap = np.abs(self.values[:, None] - self.values[None, :]) - D
        return float(max(gap.max(), 0.0))


@dataclass(frozen=True, eq=False)
class TransportResult:
    value: float
    plan: np.ndarray
    potential: DualPotential
    row_potential: np.ndarray
    col_potential: np.ndarray
    duality_gap: float
    pivots: int


def _northwest_corner(a, b):
    m, n = a.size, b.size
    a, b = a.copy(), b.copy()
    plan = np.zeros((m, n))
    basis = []
    i = j = 0
    while True:
        q = min(a[i], b[j])
        plan[i, j] = max(q, 0.0)
        basis.append((i, j))
        a[i] -= q
        b[j] -= q
        if i == m - 1 and j == n - 1:
            break
        if j == n - 1 or (i < m - 1 and a[i] <= b[j]):
            i += 1
        else:
            j += 1
    return plan, basis


def _least_cost(a, b, C):
    m, n = a.size, b.size
    a, b = a.copy(), b.copy()
    plan = np.zeros((m, n))
    basis = []
    rows = np.ones(m, dtype=bool)
    cols = np.ones(n, dtype=bool)
    masked = C.astype(float).copy()
    for _ in range(m + n - 1):
        flat = int(np.argmin(masked))
        i, j = divmod(flat, n)
        q = min(a[i], b[j])
        plan[i, j] = max(q, 0.0)
        basis.append((i, j))
        a[i] -= q
        b[j] -= q
        # cross out exactly one line so the basis stays a spanning tree
        if (a[i] <= b[j] and rows.sum() > 1) or cols.sum() == 1:
            rows[i] = False
            masked[i, :] = np.inf
        else:
            cols[j] = False
            masked[:, j] = np.inf
    return plan, basis


def _tree_adjacency(basis, m, n):
    adj = [[] for _ in range(m + n)]
    for i, j in basis:
        adj[i].append(m + j)
        adj[m + j].append(i)
    return adj


def _potentials(adj, C, m, n):
    u = np.zeros(m)
    v = np.zeros(n)
    seen = np.zeros(m + n, dtype=bool)
    # the basis is a spanning tree, so one root pins every potential
    seen[0] = True
    queue = deque([0])
    while queue:
        node = queue.popleft()
        for nb in adj[node]:
            if seen[nb]:
                continue
            seen[nb] = True
            if node < m:
                v[nb - m] = C[node, nb - m] - u[node]
            else:
                u[nb] = C[nb, node - m] - v[node - m]
            queue.append(nb)
    if not seen.all():
        raise RuntimeError("transport basis is not a spanning tree")
    return u, v


def _tree_path(adj, start, goal):
    parent = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        if node == goal:
            break
        for nb in adj[node]:
            if nb not in parent:
                parent[nb] = node
                queue.append(nb)
    path = [goal]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]])
    return path[::-1]


def transport_simplex(a, b, C, initial="northwest", max_pivots=None):
    """Solve ``min <P, C>`` over couplings of ``a`` and ``b``.

    ``a`` and ``b`` must be positive with equal sums (``b`` is rescaled to
    the exact sum of ``a``).  ``initial`` selects the starting basis,
    ``"northwest"`` or ``"least_cost"``.  Returns ``(plan, u, v, pivots)``
    with ``u_i + v_j <= C_ij`` and equality on the final basis.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    C = np.asarray(C, dtype=float)
    m, n = a.size, b.size
    b = b * (a.sum() / b.sum())
    if initial == "northwest":
        plan, basis = _northwest_corner(a, b)
    elif initial == "least_cost":
        plan, basis = _least_cost(a, b, C)
    else:
        raise ValueError(f"unknown initial basis rule {initial!r}")
    in_basis = np.zeros((m, n), dtype=bool)
    for cell in basis:
        in_basis[cell] = True
    scale = max(1.0, float(np.abs(C).max()))
    cost_eps = 1e-12 * scale
    mass_eps = 1e-15 * max(1.0, float(a.sum()))
    max_pivots = max_pivots or 50 * m * n + 1000
    streak = 0
    pivots = 0
    while True:
        adj = _tree_adjacency(basis, m, n)
        u, v = _potentials(adj, C, m, n)
        reduced = C - u[:, None] - v[None, :]
        reduced[in_basis] = 0.0
        if streak >= BLAND_STREAK:
            candidates = np.flatnonzero(reduced < -cost_eps)
            if candidates.size == 0:
                break
            flat = candidates[0]
        else:
            flat = int(np.argmin(reduced))
            if reduced.flat[flat] >= -cost_eps:
                break
        ei, ej = divmod(int(flat), n)
        pivots += 1
        if pivots > max_pivots:
            raise RuntimeError(f"transport simplex exceeded {max_pivots} pivots")
        path = _tree_path(adj, ei, m + ej)
        # walk the cycle from the entering column back to the entering row
        edges = []
        for p, q in zip(path[::-1][:-1], path[::-1][1:]):
            edges.append((q, p - m) if q < m else (p, q - m))
        minus = edges[0::2]
        plus = edges[1::2]
        theta = min(plan[c] for c in minus)
        ties = [c for c in minus if plan[c] <= theta + mass_eps]
        leaving = min(ties)
        for c in minus:
            plan[c] -= theta
        for c in plus:
            plan[c] += theta
        plan[ei, ej] = theta
        plan[leaving] = 0.0
        np.clip(plan, 0.0, None, out=plan)
        basis.remove(leaving)
        basis.append((ei, ej))
        in_basis[leaving] = False
        in_basis[ei, ej] = True
        streak = streak + 1 if theta <= mass_eps else 0
    return plan, u, v, pivots


def _check_masses(a, b):
    ma, mb = float(np.sum(a)), float(np.sum(b))
    if abs(ma - mb) > MASS_TOL * max(1.0, ma, mb):
        raise MassMismatchError(
            f"total-mass mismatch: {ma!r} vs {mb!r} (defect {abs(ma - mb):.3e})")


def c_transform(points, sinks, v, metric=None):
    """``f(z) = min_j (d(z, y_j) - v_j)`` evaluated at ``points``."""
    D = pairwise_distances(points, sinks) if metric is None else metric(points, sinks)
    return np.min(D - v[None, :], axis=1)


def transport(x, a, y, b, metric=None):
    """Optimal transport between weighted point sets under ``metric``.

    ``metric(X, Y)`` returns a cost matrix; the default is Euclidean.  The
    returned potential lives on the rows of ``x`` followed by those of ``y``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("cannot transport an empty measure")
    _check_masses(a, b)
    metric = metric or pairwise_distances
    m, n = a.size, b.size
    keep_a = a > PRUNE_TOL
    keep_b = b > PRUNE_TOL
    both = np.concatenate([x, y])
    if not keep_a.any() or not keep_b.any():
        plan = np.zeros((m, n))
        pot = DualPotential(both, np.zeros(m + n))
        return TransportResult(0.0, plan, pot, np.zeros(m), np.zeros(n), 0.0, 0)
    ia = np.flatnonzero(keep_a)
    ib = np.flatnonzero(keep_b)
    oa = ia[lexsort_rows(x[ia])]
    ob = ib[lexsort_rows(y[ib])]
    C = metric(x[oa], y[ob])
    initial = "northwest" if x.shape[1] == 1 else "least_cost"
    plan_s, u_s, v_s, pivots = transport_simplex(a[oa], b[ob], C, initial)
    plan = np.zeros((m, n))
    plan[np.ix_(oa, ob)] = plan_s
    value = float(np.sum(plan_s * C))
    f = c_transform(both, y[ob], v_s, metric)
    dual_value = float(np.dot(f[:m], a) - np.dot(f[m:], b))
    u = np.zeros(m)
    v = np.zeros(n)
    u[oa] = u_s
    v[ob] = v_s
    pot = DualPotential(both, f)
    return TransportResult(value, plan, pot, u, v, abs(value - dual_value), pivots)


def _truncated_metric(cap):
    def metric(X, Y):
        return np.minimum(pairwise_distances(X, Y), cap)
    return metric


def w1_distance(mu, nu):
    """Kantorovich distance between two discrete measures of equal mass."""
    if mu.dim != nu.dim:
        raise ValueError(f"measures live in R^{mu.dim} and R^{nu.dim}")
    return transport(mu.points, mu.weights, nu.points, nu.weights)


def modified_w1(mu, nu):
    """Kantorovich distance with test functions also bounded by one in sup norm.

    For equal masses the box-constrained dual equals optimal transport under
    the capped metric ``min(d, 2)``: a function 1-Lipschitz for the capped
    metric has oscillation at most two and can be shifted into ``[-1, 1]``.
    """
    if mu.dim != nu.dim:
        raise ValueError(f"measures live in R^{mu.dim} and R^{nu.dim}")
    res = transport(mu.points, mu.weights, nu.points, nu.weights, _truncated_metric(2.0))
    return res.value


def union_support(*point_sets, dedup_tol=DEDUP_TOL):
    """Merge several point arrays; returns ``(points, [index arrays])``."""
    arrays = [np.atleast_2d(np.asarray(p, dtype=float)) for p in point_sets]
    stacked = np.concatenate(arrays)
    reps, labels = cluster_representatives(stacked, dedup_tol)
    out = []
    start = 0
    for arr in arrays:
        out.append(labels[start:start + arr.shape[0]])
        start += arr.shape[0]
    return stacked[reps], out


def signed_lip_dual(points, s, metric=None, bounded=False):
    """``max sum_x f(x) s(x)`` over 1-Lipschitz ``f`` for a zero-mass signed ``s``.

    With ``bounded=True`` the test functions also satisfy ``|f| <= 1``.
    Returns ``(value, f)`` where ``f`` holds the maximizer's values at
    ``points``.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    s = np.asarray(s, dtype=float)
    pos = s > PRUNE_TOL
    neg = s < -PRUNE_TOL
    if not pos.any() and not neg.any():
        return 0.0, np.zeros(points.shape[0])
    _check_masses(s[pos], -s[neg])
    if not pos.any() or not neg.any():
        return 0.0, np.zeros(points.shape[0])
    base = metric or pairwise_distances
    if bounded:
        def metric(X, Y):
            return np.minimum(base(X, Y), 2.0)
    else:
        metric = base
    res = transport(points[pos], s[pos], points[neg], -s[neg], metric)
    f = c_transform(points, points[neg], res.col_potential, metric)
    if bounded:
        f = f - 0.5 * (f.max() + f.min())
    return float(np.dot(f, s)), f


def brute_force_w1(mu, nu, max_points=6):
    """Exact W1 by enumerating every basic solution of the transportation polytope.

    Only the difference ``mu - nu`` matters, so the enumeration runs between
    its positive and negative parts on the merged support.
    """
    pts, (ia, ib) = union_support(mu.points, nu.points)
    if pts.shape[0] > max_points:
        raise InstanceTooLargeError(
            f"combined support has {pts.shape[0]} points (limit {max_points})")
    _check_masses(mu.weights, nu.weights)
    s = np.zeros(pts.shape[0])
    np.add.at(s, ia, mu.weights)
    np.add.at(s, ib, -nu.weights)
    src = np.flatnonzero(s > PRUNE_TOL)
    dst = np.flatnonzero(s < -PRUNE_TOL)
    if src.size == 0 or dst.size == 0:
        return 0.0
    p, q = src.size, dst.size
    supply = s[src]
    demand = -s[dst]
    demand = demand * supply.sum() / demand.sum()
    C = pairwise_distances(pts[src], pts[dst]).ravel()
    cells = [(i, j) for i in range(p) for j in range(q)]
    # row sums and all but the last column sum: the dropped one is implied
    A = np.zeros((p + q - 1, p * q))
    for k, (i, j) in enumerate(cells):
        A[i, k] = 1.0
        if j < q - 1:
            A[p + j, k] = 1.0
    rhs = np.concatenate([supply, demand[:-1]])
    best = np.inf
    for subset in itertools.combinations(range(p * q), p + q - 1):
        sub = A[:, subset]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        x = np.linalg.solve(sub, rhs)
        if np.any(x < -1e-12):
            continue
        best = min(best, float(np.dot(C[list(subset)], x)))
    return best


def _spanning_trees(u):
    """Edge lists of all labelled spanning trees on ``u`` nodes (Pruefer codes)."""
    if u == 1:
        yield []
        return
    if u == 2:
        yield [(0, 1)]
        return
    for code in itertools.product(range(u), repeat=u - 2):
        degree = [1] * u
        for c in code:
            degree[c] += 1
        edges = []
        for c in code:
            leaf = min(k for k in range(u) if degree[k] == 1)
            edges.append((leaf, c))
            degree[leaf] -= 1
            degree[c] -= 1
        rest = [k for k in range(u) if degree[k] == 1]
        edges.append((rest[0], rest[1]))
        yield edges


def lipschitz_vertices(D, tol=1e-12):
    """Vertices of ``{f : f(x) - f(y) <= D[x, y]}`` normalized by ``f[0] = 0``.

    Every vertex has a spanning tree of tight constraints, so the vertices are
    found by enumerating spanning trees and edge orientations, then keeping
    the feasible candidates.  Meant for at most six or seven points.
    """
    D = np.asarray(D, dtype=float)
    u = D.shape[0]
    if u > 7:
        raise InstanceTooLargeError(f"vertex enumeration on {u} points (limit 7)")
    if u == 1:
        return np.zeros((1, 1))
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=u - 1)))
    found = []
    for edges in _spanning_trees(u):
        adj = [[] for _ in range(u)]
        for k, (p, q) in enumerate(edges):
            adj[p].append((q, k))
            adj[q].append((p, k))
        # path-membership: f[x] = sum over tree path edges of sign * length
        member = np.zeros((u, u - 1))
        orient = np.zeros(u - 1)
        stack = [0]
        seen = {0}
        while stack:
            node = stack.pop()
            for nb, k in adj[node]:
                if nb in seen:
                    continue
                seen.add(nb)
                member[nb] = member[node]
                member[nb, k] = 1.0
                orient[k] = D[node, nb]
                stack.append(nb)
        F = (signs * orient[None, :]) @ member.T
        gap = F[:, :, None] - F[:, None, :] - D[None, :, :]
        ok = gap.max(axis=(1, 2)) <= tol * max(1.0, D.max())
        found.append(F[ok])
    V = np.concatenate(found)
    _, idx = np.unique(np.round(V, 12), axis=0, return_index=True)
    return V[np.sort(idx)]
