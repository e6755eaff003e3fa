"""
Iterated function systems of affine contractions.

Words are tuples over ``{0, ..., N-1}`` and act outermost-first:
``apply_word(ifs, (a, b, c), x) == s_a(s_b(s_c(x)))``.  Depth-K
enumerations are always returned in lexicographic word order.
"""

import itertools
from fractions import Fraction
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .errors import DimensionError
from .metric import DEDUP_TOL, PointCloud, as_point, pairwise_distances

LIPSCHITZ_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class AffineContraction:
    """``x -> linear_part @ x + offset`` with operator norm strictly below one."""

    linear_part: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.linear_part, dtype=float))
        b = as_point(self.offset)
        if A.shape != (b.size, b.size):
            raise DimensionError(
                f"linear part {A.shape} does not match offset of length {b.size}")
        if not np.all(np.isfinite(A)):
            raise ValueError("linear part must be finite")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "linear_part", A)
        object.__setattr__(self, "offset", b)
        c = self.lipschitz_constant
        if not c < 1.0:
            raise ValueError(f"map is not a strict contraction (Lipschitz constant {c})")

    @property
    def dim(self):
        return self.offset.size

    @property
    def lipschitz_constant(self):
        return float(np.linalg.norm(self.linear_part, 2))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return x @ self.linear_part.T + self.offset

    def fixed_point(self):
        return np.linalg.solve(np.eye(self.dim) - self.linear_part, self.offset)


class IteratedFunctionSystem:
    """A finite family of at least two affine contractions on the same space."""

    def __init__(self, maps):
        maps = tuple(maps)
        if len(maps) < 2:
            raise ValueError(f"an IFS needs at least two maps, got {len(maps)}")
        dims = {m.dim for m in maps}
        if len(dims) != 1:
            raise DimensionError(f"maps act on different dimensions: {sorted(dims)}")
        self.maps = maps

    @classmethod
    def from_arrays(cls, linear_parts, offsets):
        return cls(AffineContraction(A, b) for A, b in zip(linear_parts, offsets))

    def __len__(self):
        return len(self.maps)

    def __getitem__(self, i):
        return self.maps[i]

    @property
    def N(self):
        return len(self.maps)

    @property
    def dim(self):
        return self.maps[0].dim

    @property
    def lipschitz_constants(self):
        return np.array([m.lipschitz_constant for m in self.maps])

    @property
    def c_max(self):
        return float(self.lipschitz_constants.max())

    @property
    def average_contraction(self):
        """Contraction ratio of the uniform-weight Hutchinson operator."""
        return float(self.lipschitz_constants.mean())

    def fixed_points(self):
        return np.array([m.fixed_point() for m in self.maps])

    def diameter_bound(self):
        """Largest distance between map fixed points, divided by ``1 - c_max``."""
        fp = self.fixed_points()
        return float(pairwise_distances(fp).max()) / (1.0 - self.c_max)

    def image(self, points, i):
        return self.maps[i](np.asarray(points, dtype=float))


def load_ifs(path):
    """Read an IFS config: one map per line, row-major linear part then offset.

    Blank lines and ``#`` comments are ignored; numbers may be separated by
    whitespace or commas and may be written as fractions such as ``1/3``.
    """
    text = Path(path).read_text()
    return parse_ifs(text)


def parse_ifs(text):
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].replace(",", " ").strip()
        if not line:
            continue
        try:
            rows.append([float(Fraction(tok)) for tok in line.split()])
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    if not rows:
        raise ValueError("IFS config defines no maps")
    maps = []
    for lineno, vals in enumerate(rows, 1):
        n = len(vals)
        d = int(round((-1 + np.sqrt(1 + 4 * n)) / 2))
        if d < 1 or d * d + d != n:
            raise ValueError(
                f"map {lineno}: {n} numbers is not d*d + d for any dimension d")
        maps.append(AffineContraction(np.reshape(vals[: d * d], (d, d)), vals[d * d:]))
    return IteratedFunctionSystem(maps)


def format_ifs(ifs):
    lines = [f"# {ifs.N} maps in dimension {ifs.dim}: linear part (row-major), offset"]
    for m in ifs.maps:
        vals = list(m.linear_part.ravel()) + list(m.offset)
        lines.append(" ".join(repr(float(v)) for v in vals))
    return "\n".join(lines) + "\n"


def validate_word(ifs, w):
    w = tuple(int(s) for s in w)
    for s in w:
        if not 0 <= s < ifs.N:
            raise ValueError(f"invalid symbol {s} for an IFS with {ifs.N} maps")
    return w


def apply_word(ifs, w, x):
    """Apply ``s_{w1} o s_{w2} o ... o s_{wk}`` to ``x``."""
    w = validate_word(ifs, w)
    x = as_point(x)
    if x.size != ifs.dim:
        raise DimensionError(f"point of dimension {x.size} for an IFS on R^{ifs.dim}")
    for s in reversed(w):
        x = ifs.maps[s](x)
    return x


def all_words(N, K):
    """All length-K words over N symbols in lexicographic order, shape (N**K, K)."""
    if K == 0:
        return np.zeros((1, 0), dtype=int)
    return np.array(list(itertools.product(range(N), repeat=K)), dtype=int)


def word_points(ifs, seed, K):
    """Images of ``seed`` under every length-K word, in lexicographic word order."""
    if K < 0:
        raise ValueError("depth must be >= 0")
    pts = as_point(seed)[None, :]
    if pts.shape[1] != ifs.dim:
        raise DimensionError(f"seed of dimension {pts.shape[1]} for an IFS on R^{ifs.dim}")
    for _ in range(K):
        # prepending the outermost symbol keeps lexicographic order
        pts = np.concatenate([m(pts) for m in ifs.maps], axis=0)
    return pts


def default_seed(ifs):
    """Fixed point of the first map; it lies on the attractor."""
    return ifs.maps[0].fixed_point()


def attractor_approximation(ifs, seed=None, depth=8, dedup_tol=DEDUP_TOL):
    """Deduplicated cloud of all depth-``depth`` word images of ``seed``."""
    seed = default_seed(ifs) if seed is None else seed
    return PointCloud.from_points(word_points(ifs, seed, depth), dedup_tol)


def attractor_error_bound(ifs, depth):
    """A-priori Hausdorff error of a depth-K approximation seeded on the attractor."""
    return ifs.c_max ** depth * ifs.diameter_bound()


def coding_map(ifs, w, seed=None):
    """Approximate the coding-map image of any infinite extension of ``w``."""
    if len(w) == 0:
        raise ValueError("coding_map needs a nonempty word")
    seed = default_seed(ifs) if seed is None else seed
    return apply_word(ifs, w, seed)


def overlap_mass(ifs, mu, i, j, tol, depth=8):
    """Mass that ``mu`` places near both ``s_i(X)`` and ``s_j(X)``.

    ``X`` is replaced by its depth-``depth`` approximation; an atom counts when
    it lies within ``tol`` of both image clouds.  The result is a mass, so
    callers pick their own threshold for "essentially disjoint".
    """
    if i == j:
        raise ValueError("overlap_mass needs two distinct map indices")
    validate_word(ifs, (i, j))
    X = attractor_approximation(ifs, depth=depth).points
    pts = mu.support.points
    di, _ = cKDTree(ifs.image(X, i)).query(pts)
    dj, _ = cKDTree(ifs.image(X, j)).query(pts)
    near = (di <= tol) & (dj <= tol)
    return float(mu.weights[near].sum())


BUNDLED_CONFIGS = ("cantor", "dyadic", "overlap", "sierpinski")


def bundled_config_path(name):
    """Path of a config shipped with the package, e.g. ``"cantor"``."""
    if name not in BUNDLED_CONFIGS:
        raise ValueError(f"unknown bundled config {name!r}; choose from {', '.join(BUNDLED_CONFIGS)}")
    return Path(__file__).parent / "configs" / f"{name}.ifs"


def resolve_ifs(name_or_path):
    """Load a bundled config by name, otherwise read the given file."""
    if str(name_or_path) in BUNDLED_CONFIGS:
        return load_ifs(bundled_config_path(str(name_or_path)))
    return load_ifs(name_or_path)
