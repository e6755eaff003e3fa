"""
Truncated symbol space and the coding-map bridge to the attractor.

``Omega_K`` holds the ``N**K`` words of length K in lexicographic order and
carries the uniform (Bernoulli) measure.  The shift ``eta_i`` prepends ``i``
and drops the last symbol, so ``R_i phi = N^{-1/2} phi o eta_i`` makes
``R_i^* R_i`` exactly the indicator of the cylinder ``[i]``.

Matrices on word functions are written in the orthonormal basis
``N^{K/2} 1_w``; since the Bernoulli weights are uniform, the weighted
adjoint coincides with the conjugate transpose there.  On the geometric side
the point space is the deduplicated depth-K cloud with weights
``mu_K(x) = #{w : pi(w) = x} / N**K`` and orthonormal basis
``1_x / sqrt(mu_K(x))``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .hilbert import weighted_adjoint
from .ifs import all_words, attractor_error_bound, default_seed, word_points
from .metric import DEDUP_TOL, PointCloud, cluster_representatives
from .opmeasure import OperatorFamily, OperatorValuedMeasure, validate_pvm


def _sym_norm(M):
    """Operator norm of a real symmetric matrix (0 for an exact zero)."""
    if not np.any(M):
        return 0.0
    return float(np.abs(np.linalg.eigvalsh(0.5 * (M + M.T))).max())


def _check_space(N, K):
    if N < 2:
        raise ValueError("alphabet needs at least two symbols")
    if K < 1:
        raise ValueError("depth must be >= 1")


@dataclass(frozen=True, eq=False)
class SymbolSpace:
    N: int
    K: int

    def __post_init__(self):
        _check_space(self.N, self.K)

    @property
    def words(self):
        return all_words(self.N, self.K)

    @property
    def size(self):
        return self.N ** self.K

    def index(self, w):
        idx = 0
        for s in w:
            idx = idx * self.N + int(s)
        return idx

    def shift_index(self, i):
        """Index of ``eta_i(w)`` for every word index."""
        words = self.words
        shifted = np.concatenate([np.full((self.size, 1), i), words[:, :-1]], axis=1)
        return shifted @ (self.N ** np.arange(self.K - 1, -1, -1))

    def cylinder_mask(self, prefix):
        prefix = tuple(int(s) for s in prefix)
        if len(prefix) > self.K:
            raise ValueError(f"prefix of length {len(prefix)} exceeds depth {self.K}")
        if any(not 0 <= s < self.N for s in prefix):
            raise ValueError(f"invalid symbol in {prefix}")
        words = self.words
        return np.all(words[:, :len(prefix)] == np.array(prefix, dtype=int), axis=1)

    def metric(self, a, b):
        """``2**-j`` for the first differing (1-based) position ``j``; 0 if equal."""
        for j, (x, y) in enumerate(zip(a, b), 1):
            if x != y:
                return 2.0 ** -j
        return 0.0

    def distance_matrix(self):
        words = self.words
        diff = words[:, None, :] != words[None, :, :]
        first = np.where(diff.any(axis=2), diff.argmax(axis=2) + 1, 0)
        return np.where(first > 0, 2.0 ** -first.astype(float), 0.0)


@dataclass(frozen=True, eq=False)
class BernoulliMeasure:
    space: SymbolSpace
    weights: np.ndarray

    def mass(self, prefix=()):
        return float(self.weights[self.space.cylinder_mask(prefix)].sum())

    def self_similarity_defect(self, prefix):
        """``|P(C) - (1/N) sum_i P(eta_i^{-1} C)|`` for the cylinder ``C = [prefix]``."""
        N = self.space.N
        rhs = 0.0
        for i in range(N):
            # eta_i^{-1}[w1 .. wk] is [w2 .. wk] when i == w1, otherwise empty
            if prefix and prefix[0] == i:
                rhs += self.mass(prefix[1:])
        if not prefix:
            rhs = N * self.mass(())
        return abs(self.mass(prefix) - rhs / N)


def bernoulli_measure(N, K):
    space = SymbolSpace(N, K)
    return BernoulliMeasure(space, np.full(space.size, float(N) ** -K))


def shift_operator(N, K, i):
    """Matrix of ``phi -> N^{-1/2} phi o eta_i`` on functions of length-K words."""
    space = SymbolSpace(N, K)
    if not 0 <= i < N:
        raise ValueError(f"invalid symbol {i} for alphabet size {N}")
    R = np.zeros((space.size, space.size))
    R[np.arange(space.size), space.shift_index(i)] = N ** -0.5
    return R


def shift_adjoint(N, K, i):
    R = shift_operator(N, K, i)
    return weighted_adjoint(R, np.full(R.shape[0], float(N) ** -K))


def canonical_pvm(N, K):
    """Rank-one word projections; locations are the words' digit vectors."""
    space = SymbolSpace(N, K)
    vals = np.zeros((space.size, space.size, space.size))
    vals[np.arange(space.size), np.arange(space.size), np.arange(space.size)] = 1.0
    return OperatorValuedMeasure.from_atoms(space.words.astype(float), vals, dedup_tol=0.0)


def cylinder_projection(N, K, prefix):
    """``E([prefix])`` for the canonical PVM: the diagonal cylinder indicator."""
    return np.diag(SymbolSpace(N, K).cylinder_mask(prefix).astype(float))


def word_operator(N, K, w):
    """``R_{w_k} ... R_{w_1}``."""
    size = N ** K
    Q = np.eye(size)
    for s in w:
        Q = shift_operator(N, K, s) @ Q
    return Q


def check_cylinder_identity(N, K, w):
    """``|| E([w]) - R_{w1}^* .. R_{wk}^* R_{wk} .. R_{w1} ||`` in operator norm."""
    if not 1 <= len(w) <= K:
        raise ValueError(f"word length {len(w)} outside 1..{K}")
    Q = word_operator(N, K, w)
    return _sym_norm(cylinder_projection(N, K, w) - Q.T @ Q)


def check_self_similarity(N, K, w):
    """Defect of ``E([w]) = sum_i R_i^* E(eta_i^{-1}[w]) R_i`` for ``len(w) <= K``."""
    lhs = cylinder_projection(N, K, w)
    rhs = np.zeros_like(lhs)
    for i in range(N):
        if not w:
            pre = ()
        elif w[0] == i:
            pre = tuple(w[1:])
        else:
            continue
        R = shift_operator(N, K, i)
        rhs += R.T @ cylinder_projection(N, K, pre) @ R
    return _sym_norm(lhs - rhs)


def _words_upto(N, K):
    for k in range(1, K + 1):
        for w in all_words(N, k):
            yield tuple(int(s) for s in w)


def symbolic_sweep(N, K):
    """Every symbolic identity at (N, K) with its largest defect."""
    space = SymbolSpace(N, K)
    R = [shift_operator(N, K, i) for i in range(N)]
    weights = np.full(space.size, float(N) ** -K)
    identity = _sym_norm(sum(weighted_adjoint(Ri, weights) @ Ri for Ri in R) - np.eye(space.size))
    single = max(_sym_norm(R[i].T @ R[i] - cylinder_projection(N, K, (i,))) for i in range(N))
    P = bernoulli_measure(N, K)
    cyl = 0.0
    sim = check_self_similarity(N, K, ())
    bern = 0.0
    for w in _words_upto(N, K):
        cyl = max(cyl, check_cylinder_identity(N, K, w))
        sim = max(sim, check_self_similarity(N, K, w))
        bern = max(bern, P.self_similarity_defect(w))
    words = space.words
    left_inverse = 0
    for i in range(N):
        shifted = words[space.shift_index(i)]
        left_inverse = max(left_inverse, int(np.any(shifted[:, 1:] != words[:, :-1])))
    return {
        "N": N,
        "K": K,
        "shift_identity_defect": identity,
        "shift_cylinder_defect": single,
        "cylinder_identity_defect": cyl,
        "self_similarity_defect": sim,
        "bernoulli_defect": bern,
        "bernoulli_total_mass_defect": abs(P.mass() - 1.0),
        "left_inverse_violations": left_inverse,
        "canonical_pvm_defect": validate_pvm(canonical_pvm(N, K)).max_defect(),
    }


@dataclass(frozen=True, eq=False)
class GeometricOperators:
    """The depth-K point space, its operator family and the coding isometry.

    ``V[w, x] = [pi(w) = x] / sqrt(mult(x))`` maps point functions to word
    functions; ``F.operators[i][x, y] = N^{-1/2} sqrt(mu(x)/mu(y)) [s_i(x) = y]``
    where ``s_i`` is ``s_i`` followed by the snap back into the point space.
    """

    points: PointCloud
    weights: np.ndarray
    coding: np.ndarray
    F: OperatorFamily
    V: np.ndarray
    snap: np.ndarray
    snap_distance: float
    N: int
    K: int

    def isometry_defect(self):
        return float(np.linalg.norm(self.V.T @ self.V - np.eye(self.V.shape[1]), 2))

    def intertwining_defect(self):
        worst = 0.0
        for i in range(self.N):
            R = shift_operator(self.N, self.K, i)
            worst = max(worst, float(np.linalg.norm(self.V @ self.F.operators[i].real - R @ self.V, 2)))
        return worst

    def family_defect(self):
        return self.F.identity_defect()


def build_geometric_operators(ifs, K, dedup_tol=DEDUP_TOL):
    """Point space, operators ``F_i`` and the isometry ``V`` at depth K.

    The seed is the fixed point of the first map.  For a point ``x`` coded
    by its lexicographically smallest word ``w``, ``s_i(x)`` snaps to the
    point coded by ``eta_i(w)``.  This is the nearest point when the pieces
    are separated, and it stays within ``c_max**K * diam`` (plus the
    deduplication slack) of ``s_i(x)`` in every case.

    Raises
    ------
    ValidationError
        If a snapped image lies farther than that a-priori bound.
    """
    if K < 1:
        raise ValueError("depth must be >= 1")
    N = ifs.N
    space = SymbolSpace(N, K)
    raw = word_points(ifs, default_seed(ifs), K)
    reps, coding = cluster_representatives(raw, dedup_tol)
    pts = raw[reps]
    n = pts.shape[0]
    mult = np.bincount(coding, minlength=n).astype(float)
    mu = mult / space.size
    # first (lexicographically smallest) word coding each point
    canonical = np.full(n, space.size)
    np.minimum.at(canonical, coding, np.arange(space.size))
    snap = np.zeros((N, n), dtype=int)
    # representatives sit within dedup_tol of the coded points, before and after s_i
    bound = attractor_error_bound(ifs, K) + (1.0 + ifs.c_max) * dedup_tol
    worst = 0.0
    for i in range(N):
        snap[i] = coding[space.shift_index(i)[canonical]]
        d = np.linalg.norm(ifs.image(pts, i) - pts[snap[i]], axis=1)
        k = int(np.argmax(d))
        if d[k] > bound:
            raise ValidationError(
                f"s_{i}(x) = {ifs.image(pts[k], i)} lies {d[k]:.3e} from its snapped point "
                f"{pts[snap[i][k]]} (bound {bound:.3e})")
        worst = max(worst, float(d[k]))
    F = np.zeros((N, n, n))
    rows = np.arange(n)
    for i in range(N):
        F[i, rows, snap[i]] = N ** -0.5 * np.sqrt(mu / mu[snap[i]])
    V = np.zeros((space.size, n))
    V[np.arange(space.size), coding] = 1.0 / np.sqrt(mult[coding])
    return GeometricOperators(PointCloud(pts, dedup_tol), mu, coding, OperatorFamily(F), V,
                              snap, worst, N, K)


def pullback_pvm(ifs, K, dedup_tol=DEDUP_TOL, geometry=None):
    """Atoms ``(x, V^* E(pi^{-1}{x}) V)`` on the depth-K point space."""
    geo = geometry or build_geometric_operators(ifs, K, dedup_tol)
    n = len(geo.points)
    vals = np.zeros((n, n, n))
    for x in range(n):
        E = (geo.coding == x).astype(float)
        vals[x] = geo.V.T @ (E[:, None] * geo.V)
    return OperatorValuedMeasure.from_atoms(geo.points.points, vals, dedup_tol=0.0)


def unit_constant(geo):
    """The constant function 1 in the orthonormal point basis."""
    return np.sqrt(geo.weights)
