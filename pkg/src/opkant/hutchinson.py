"""
The Hutchinson operator on discrete measures and its fixed point.

``T(mu) = (1/N) sum_i mu o s_i^{-1}`` pushes every atom ``(x, w)`` to the N
atoms ``(s_i(x), w/N)``.  Iterating ``T`` multiplies the atom count by N, so
the fixed-point iteration snaps atoms to a :class:`QuantizationGrid` after
every step and accounts for the displacement explicitly.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError
from .ifs import default_seed
from .metric import DEDUP_TOL, as_point
from .transport import DiscreteMeasure, w1_distance


@dataclass(frozen=True)
class QuantizationGrid:
    """Axis-aligned cells of side ``cell_size`` anchored at ``origin``."""

    cell_size: float
    origin: np.ndarray = None

    def __post_init__(self):
        if not self.cell_size > 0:
            raise ValueError("cell_size must be > 0")

    def origin_for(self, dim):
        if self.origin is None:
            return np.zeros(dim)
        return as_point(self.origin)

    def cells(self, points):
        points = np.atleast_2d(points)
        return np.floor((points - self.origin_for(points.shape[1])) / self.cell_size).astype(np.int64)

    def displacement(self, dim):
        """Largest distance an atom can move when merged inside one cell."""
        return float(np.sqrt(dim) * self.cell_size)


def group_by_cell(grid, points):
    """Return ``(labels, n_cells)`` with cells numbered in sorted cell-index order."""
    cells = grid.cells(points)
    _, labels = np.unique(cells, axis=0, return_inverse=True)
    labels = labels.ravel()
    return labels, int(labels.max()) + 1 if labels.size else 0


def hutchinson_step(ifs, mu):
    """One application of the uniform-weight Hutchinson operator."""
    pts = np.concatenate([m(mu.points) for m in ifs.maps])
    w = np.tile(mu.weights, ifs.N) / ifs.N
    return DiscreteMeasure.from_atoms(pts, w, mu.support.dedup_tolerance)


def quantize(mu, grid):
    """Merge atoms sharing a grid cell at their weighted centroid."""
    labels, k = group_by_cell(grid, mu.points)
    mass = np.zeros(k)
    np.add.at(mass, labels, mu.weights)
    counts = np.bincount(labels, minlength=k)
    centroid = np.zeros((k, mu.dim))
    np.add.at(centroid, labels, mu.weights[:, None] * mu.points)
    nonzero = mass > 0
    centroid[nonzero] /= mass[nonzero, None]
    # lone atoms keep their exact coordinates
    lone = np.flatnonzero(counts == 1)
    _, first = np.unique(labels, return_index=True)
    centroid[lone] = mu.points[first[lone]]
    empty = ~nonzero & (counts > 1)
    centroid[empty] = mu.points[first[empty]]
    return DiscreteMeasure.from_atoms(centroid, mass, mu.support.dedup_tolerance)


def quantization_budget(ifs, grid):
    """Displacement per step summed over the contraction's geometric series."""
    return grid.displacement(ifs.dim) / (1.0 - ifs.average_contraction)


@dataclass
class FixedPointResult:
    measure: object
    residuals: list = field(default_factory=list)
    atom_counts: list = field(default_factory=list)
    budget: float = 0.0
    contraction: float = 0.0

    @property
    def iterations(self):
        return len(self.residuals)


def hutchinson_fixed_point(ifs, tol=1e-6, max_iter=200, grid=None, initial=None):
    """Iterate ``mu -> quantize(T(mu))`` until successive iterates are close.

    Stops once ``W1(mu_{n+1}, mu_n) <= tol + budget`` where ``budget`` is
    :func:`quantization_budget` (zero without a grid).  The default start is
    the point mass at the fixed point of the first map.

    Raises
    ------
    ConvergenceError
        If ``max_iter`` steps do not reach the tolerance; the exception
        carries the last residual and the full history.
    """
    if not tol > 0:
        raise ValueError("tol must be > 0")
    mu = DiscreteMeasure.dirac(default_seed(ifs)) if initial is None else initial
    budget = 0.0 if grid is None else quantization_budget(ifs, grid)
    result = FixedPointResult(mu, budget=budget, contraction=ifs.average_contraction)
    for _ in range(max_iter):
        nxt = hutchinson_step(ifs, mu)
        if grid is not None:
            nxt = quantize(nxt, grid)
        r = w1_distance(nxt, mu).value
        result.residuals.append(r)
        result.atom_counts.append(len(nxt))
        mu = nxt
        if r <= tol + budget:
            result.measure = mu
            return result
    raise ConvergenceError(
        f"no convergence after {max_iter} iterations (last residual {result.residuals[-1]:.3e})",
        residual=result.residuals[-1], history=result.residuals)


def hutchinson_iterate(ifs, depth, initial=None):
    """``T^depth`` applied to ``initial`` (default: point mass at the first fixed point)."""
    mu = DiscreteMeasure.dirac(default_seed(ifs)) if initial is None else initial
    for _ in range(depth):
        mu = hutchinson_step(ifs, mu)
    return mu


def random_measure(rng, dim, n_atoms, low, high):
    pts = rng.uniform(low, high, size=(n_atoms, dim))
    w = rng.random(n_atoms) + 0.05
    return DiscreteMeasure.from_atoms(pts, w / w.sum(), DEDUP_TOL)


def contraction_ratio_report(ifs, trials=100, seed=0, max_atoms=6):
    """Largest observed ``W1(T mu, T nu) / W1(mu, nu)`` over random measure pairs.

    Supports are drawn in a box around the map fixed points.  Pairs at zero
    distance are skipped.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    fp = ifs.fixed_points()
    pad = ifs.diameter_bound()
    low, high = fp.min(axis=0) - pad, fp.max(axis=0) + pad
    worst = 0.0
    for _ in range(trials):
        mu = random_measure(rng, ifs.dim, int(rng.integers(1, max_atoms + 1)), low, high)
        nu = random_measure(rng, ifs.dim, int(rng.integers(1, max_atoms + 1)), low, high)
        d = w1_distance(mu, nu).value
        if d <= 1e-12:
            continue
        dT = w1_distance(hutchinson_step(ifs, mu), hutchinson_step(ifs, nu)).value
        worst = max(worst, dT / d)
    return worst
