"""
Finitely supported positive operator-valued measures.

An :class:`OperatorValuedMeasure` is a list of atoms ``(x_k, M_k)`` with
``M_k`` positive semidefinite and ``sum_k M_k = I``.  Integration against a
real function ``f`` gives the Hermitian operator ``sum_k f(x_k) M_k``.

The generalized Kantorovich distance

    rho(A, B) = sup_{f 1-Lipschitz} || int f dA - int f dB ||

is a maximum of a convex function, so :func:`rho_distance` returns a
certified lower bound found by alternating ascent.  For real ``f`` the
integrated difference is self-adjoint, hence its norm is
``sup_{|h|=1} |<(.)h, h>|`` and the two suprema may be taken in either
order: for a fixed unit vector ``h`` the inner problem is the transport
dual of the zero-mass signed measure ``<(A - B)(.)h, h>``; for a fixed ``f``
the best ``h`` is an extreme eigenvector.  Two independent oracles back it:
:func:`rho_vertex_oracle` (exact, enumerates Lipschitz-polytope vertices) and
:func:`rho_brute_oracle` (sphere sampling).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, InstanceTooLargeError, ValidationError
from .hilbert import as_operator, extreme_eigenpair, spectral_pvm
from .hutchinson import group_by_cell
from .ifs import default_seed
from .metric import DEDUP_TOL, PointCloud, as_point, cluster_representatives, pairwise_distances
from .transport import (DiscreteMeasure, DualPotential, lipschitz_vertices,
                        signed_lip_dual, union_support)

POVM_TOL = 1e-10
FAMILY_TOL = 1e-8


def _hermitize(M):
    return 0.5 * (M + np.swapaxes(M.conj(), -1, -2))


@dataclass(frozen=True, eq=False)
class OperatorValuedMeasure:
    """Atoms ``(locations[k], values[k])``; build with :meth:`from_atoms`."""

    locations: np.ndarray
    values: np.ndarray

    @classmethod
    def from_atoms(cls, locations, values, dedup_tol=DEDUP_TOL):
        locs = np.asarray(locations, dtype=float)
        if locs.ndim == 1:
            locs = locs[:, None]
        vals = np.asarray(values, dtype=complex)
        if vals.ndim == 2:
            vals = vals[None]
        if vals.ndim != 3 or vals.shape[1] != vals.shape[2]:
            raise ValueError(f"atom values must have shape (k, n, n), got {vals.shape}")
        if locs.shape[0] != vals.shape[0]:
            raise ValueError(f"{locs.shape[0]} locations but {vals.shape[0]} atom values")
        if locs.shape[0] == 0:
            raise ValueError("an operator-valued measure needs at least one atom")
        reps, labels = cluster_representatives(locs, dedup_tol)
        merged = np.zeros((reps.size,) + vals.shape[1:], dtype=complex)
        np.add.at(merged, labels, vals)
        merged = _hermitize(merged)
        locs = np.ascontiguousarray(locs[reps])
        locs.setflags(write=False)
        merged.setflags(write=False)
        return cls(locs, merged)

    @classmethod
    def delta(cls, x, hilbert_dim):
        """Point mass at ``x`` carrying the identity."""
        return cls.from_atoms(as_point(x)[None, :], np.eye(hilbert_dim)[None])

    def __len__(self):
        return self.locations.shape[0]

    @property
    def hilbert_dim(self):
        return self.values.shape[1]

    @property
    def dim(self):
        return self.locations.shape[1]

    def total(self):
        return self.values.sum(axis=0)

    def atom_norms(self):
        return np.abs(np.linalg.eigvalsh(self.values)).max(axis=1)


@dataclass(frozen=True)
class MeasureDiagnostics:
    psd_violation: float
    normalization_defect: float
    hermiticity_defect: float
    idempotency_defect: float = None
    orthogonality_defect: float = None

    def max_defect(self):
        vals = [v for v in (self.psd_violation, self.normalization_defect,
                            self.hermiticity_defect, self.idempotency_defect,
                            self.orthogonality_defect) if v is not None]
        return max(vals)

    def ok(self, tol=POVM_TOL):
        return self.max_defect() <= tol


def validate_povm(A):
    """Report how far ``A`` is from a positive operator-valued measure."""
    V = A.values
    herm = float(np.abs(V - np.swapaxes(V.conj(), 1, 2)).max())
    eig = np.linalg.eigvalsh(_hermitize(V))
    psd = float(max(0.0, -eig.min()))
    norm = float(np.abs(np.linalg.eigvalsh(_hermitize(A.total()) - np.eye(A.hilbert_dim))).max())
    return MeasureDiagnostics(psd, norm, herm)


def validate_pvm(E):
    """:func:`validate_povm` plus idempotency and pairwise orthogonality defects.

    Each atom is factored as ``U_k U_k^*`` over its eigenvectors with
    eigenvalue above one half.  The orthogonality defect is then the largest
    ``||U_i^* U_j||_F`` over distinct atoms, which bounds ``||P_i P_j||`` up
    to the idempotency defect and costs one Gram matrix for all pairs.
    """
    base = validate_povm(E)
    lam, U = np.linalg.eigh(_hermitize(E.values))
    idem = float(np.abs(lam * lam - lam).max())
    keep = lam > 0.5
    W = np.concatenate([U[k][:, keep[k]] for k in range(len(E))], axis=1)
    owner = np.repeat(np.arange(len(E)), keep.sum(axis=1))
    G = np.abs(W.conj().T @ W) ** 2
    blocks = np.zeros((len(E), len(E)))
    np.add.at(blocks, (owner[:, None], owner[None, :]), G)
    np.fill_diagonal(blocks, 0.0)
    orth = float(np.sqrt(blocks.max())) if len(E) > 1 else 0.0
    return MeasureDiagnostics(base.psd_violation, base.normalization_defect,
                              base.hermiticity_defect, idem, orth)


def require_povm(A, tol=1e-8):
    diag = validate_povm(A)
    if not diag.ok(tol):
        raise ValidationError(f"not a positive operator-valued measure: {diag}")


def _function_values(A, f):
    if callable(f):
        vals = np.asarray(f(A.locations), dtype=float).ravel()
    else:
        vals = np.asarray(f, dtype=float).ravel()
    if vals.size != len(A):
        raise ValueError(f"{vals.size} function values for {len(A)} atoms")
    if not np.all(np.isfinite(vals)):
        raise ValueError("function values must be finite on the support")
    return vals


def integrate(A, f):
    """``sum_k f(x_k) M_k`` for a real function given as callable or values."""
    return _hermitize(np.einsum("k,kij->ij", _function_values(A, f), A.values))


@dataclass(frozen=True, eq=False)
class ScalarMeasure:
    """Complex weights on the atom locations of an operator-valued measure."""

    points: np.ndarray
    weights: np.ndarray

    @property
    def total_mass(self):
        return complex(self.weights.sum())


def scalar_measure(A, g, h):
    """Atoms ``(x_k, <M_k g, h>)`` with the inner product linear in the first slot."""
    g = np.asarray(g, dtype=complex).ravel()
    h = np.asarray(h, dtype=complex).ravel()
    if g.size != A.hilbert_dim or h.size != A.hilbert_dim:
        raise ValueError(f"vectors must have length {A.hilbert_dim}")
    w = np.einsum("i,kij,j->k", h.conj(), A.values, g)
    return ScalarMeasure(A.locations, w)


def diagonal_measure(A, h):
    """``<A(.)h, h>`` for a unit vector ``h`` as a probability measure."""
    w = scalar_measure(A, h, h).weights.real
    return DiscreteMeasure.from_atoms(A.locations, np.clip(w, 0.0, None))


def _difference(A, B):
    if A.hilbert_dim != B.hilbert_dim:
        raise ValueError(f"Hilbert dimensions differ: {A.hilbert_dim} vs {B.hilbert_dim}")
    if A.dim != B.dim:
        raise ValueError(f"ambient dimensions differ: {A.dim} vs {B.dim}")
    pts, (ia, ib) = union_support(A.locations, B.locations)
    D = np.zeros((pts.shape[0], A.hilbert_dim, A.hilbert_dim), dtype=complex)
    np.add.at(D, ia, A.values)
    np.add.at(D, ib, -B.values)
    return pts, D


def _cost(points, bounded):
    D = pairwise_distances(points)
    return np.minimum(D, 2.0) if bounded else D


@dataclass(frozen=True, eq=False)
class RhoResult:
    """A lower bound on rho with its re-evaluable certificates.

    ``value == || sum_x f(x) (A - B)(x) ||`` for the 1-Lipschitz ``f`` and
    ``<(int f d(A - B)) h, h> == value`` for the unit vector ``h``.
    """

    value: float
    f: DualPotential
    h: np.ndarray
    ascents: int = 0


def _diagonal(D, h):
    return np.einsum("i,kij,j->k", h.conj(), D, h).real


def _ascend(points, D, h, bounded, tol, max_steps):
    best = (-1.0, None, None)
    for _ in range(max_steps):
        _, f = signed_lip_dual(points, _diagonal(D, h), bounded=bounded)
        lam, h_new = extreme_eigenpair(_hermitize(np.einsum("k,kij->ij", f, D)))
        val = abs(lam)
        if lam < 0:
            f = -f
        if val <= best[0] + tol:
            break
        best = (val, f, h_new)
        h = h_new
    return best


def _anchor_functions(points, bounded, limit=8):
    D = pairwise_distances(points)
    for z in range(min(points.shape[0], limit)):
        f = D[:, z]
        yield np.clip(f - 1.0, -1.0, 1.0) if bounded else f


def rho_distance(A, B, restarts=32, seed=0, bounded=False, tol=1e-12, max_steps=100):
    """Generalized Kantorovich distance by alternating ascent (a certified lower bound).

    Starts are the extreme eigenvectors of ``int f d(A - B)`` for distance
    functions ``f = d(., z)`` anchored at support points, followed by
    ``restarts`` random unit vectors drawn from ``seed``.  Each start
    alternates the transport dual in ``f`` with the eigenproblem in ``h``
    until the gain drops below ``tol``.  The best start wins; ties go to the
    earliest.  With ``bounded=True`` the test functions satisfy ``|f| <= 1``.
    """
    require_povm(A)
    require_povm(B)
    points, D = _difference(A, B)
    n = A.hilbert_dim
    starts = []
    if n == 1:
        starts.append(np.ones(1, dtype=complex))
    else:
        for f in _anchor_functions(points, bounded):
            starts.append(extreme_eigenpair(_hermitize(np.einsum("k,kij->ij", f, D)))[1])
        rng = np.random.default_rng(seed)
        for _ in range(restarts):
            h = rng.normal(size=n) + 1j * rng.normal(size=n)
            starts.append(h / np.linalg.norm(h))
    best = (0.0, np.zeros(points.shape[0]), starts[0])
    for h0 in starts:
        val, f, h = _ascend(points, D, h0, bounded, tol, max_steps)
        if f is not None and val > best[0]:
            best = (val, f, h)
    return RhoResult(float(best[0]), DualPotential(points, best[1]), best[2], len(starts))


def modified_rho(A, B, restarts=32, seed=0):
    """rho restricted to 1-Lipschitz test functions with ``|f| <= 1``."""
    return rho_distance(A, B, restarts=restarts, seed=seed, bounded=True).value


def rho_vertex_oracle(A, B, bounded=False):
    """Exact rho for small supports: maximize over all Lipschitz-polytope vertices.

    ``f -> ||int f d(A - B)||`` is convex, so its maximum over the polytope of
    1-Lipschitz functions (modulo constants, which the zero-mass difference
    ignores) sits at a vertex.  Returns ``(value, f)``.
    """
    points, D = _difference(A, B)
    V = lipschitz_vertices(_cost(points, bounded))
    M = _hermitize(np.einsum("vk,kij->vij", V, D))
    norms = np.abs(np.linalg.eigvalsh(M)).max(axis=1)
    k = int(np.argmax(norms))
    return float(norms[k]), V[k]


def rho_brute_oracle(A, B, sphere_samples=4000, seed=0, max_dim=4, max_points=6):
    """Lower bound on rho from many unit vectors, each with an exact inner LP.

    The samples are random complex unit vectors plus the coordinate vectors
    and the eigenvectors of every atom difference.  The inner maximum over
    1-Lipschitz ``f`` is taken over the vertices of the Lipschitz polytope.
    """
    points, D = _difference(A, B)
    n = A.hilbert_dim
    if n > max_dim or points.shape[0] > max_points:
        raise InstanceTooLargeError(
            f"oracle limited to Hilbert dimension {max_dim} and {max_points} points")
    rng = np.random.default_rng(seed)
    H = rng.normal(size=(sphere_samples, n)) + 1j * rng.normal(size=(sphere_samples, n))
    extra = [np.eye(n, dtype=complex)]
    for Dk in D:
        extra.append(np.linalg.eigh(_hermitize(Dk))[1].T)
    H = np.concatenate([H] + extra)
    H /= np.linalg.norm(H, axis=1, keepdims=True)
    S = np.einsum("si,kij,sj->sk", H.conj(), D, H).real
    V = lipschitz_vertices(_cost(points, False))
    return float(np.abs(V @ S.T).max())


def wot_weak_gap(A, B, test_functions, test_vector_pairs):
    """``max |<(int f dA - int f dB) g, h>|`` over the supplied functions and vectors."""
    gap = 0.0
    for f in test_functions:
        Df = integrate(A, f) - integrate(B, f)
        for g, h in test_vector_pairs:
            g = np.asarray(g, dtype=complex)
            h = np.asarray(h, dtype=complex)
            gap = max(gap, float(abs(h.conj() @ Df @ g)))
    return gap


@dataclass(frozen=True, eq=False)
class OperatorFamily:
    """Square matrices ``F_0 .. F_{N-1}`` with ``sum_i F_i^* F_i = I``."""

    operators: np.ndarray

    def __post_init__(self):
        ops = np.asarray(self.operators, dtype=complex)
        if ops.ndim != 3 or ops.shape[1] != ops.shape[2]:
            raise ValueError(f"operators must have shape (N, n, n), got {ops.shape}")
        ops.setflags(write=False)
        object.__setattr__(self, "operators", ops)

    @classmethod
    def from_isometry(cls, W, N):
        """Split an ``(N n) x n`` isometry into N square blocks."""
        W = np.asarray(W, dtype=complex)
        n = W.shape[1]
        return cls(W.reshape(N, n, n))

    @classmethod
    def random(cls, rng, N, n):
        G = rng.normal(size=(N * n, n)) + 1j * rng.normal(size=(N * n, n))
        Q, _ = np.linalg.qr(G)
        return cls.from_isometry(Q, N)

    @classmethod
    def scalar(cls, N):
        return cls(np.full((N, 1, 1), 1.0 / np.sqrt(N)))

    def __len__(self):
        return self.operators.shape[0]

    @property
    def hilbert_dim(self):
        return self.operators.shape[1]

    def identity_defect(self):
        F = self.operators
        S = np.einsum("kji,kjl->il", F.conj(), F)
        return float(np.linalg.norm(S - np.eye(self.hilbert_dim), 2))


def quantize_operator_measure(A, grid):
    """Merge atoms sharing a grid cell: values add, locations average by trace."""
    labels, k = group_by_cell(grid, A.locations)
    vals = np.zeros((k,) + A.values.shape[1:], dtype=complex)
    np.add.at(vals, labels, A.values)
    tr = np.trace(A.values, axis1=1, axis2=2).real
    mass = np.zeros(k)
    np.add.at(mass, labels, tr)
    locs = np.zeros((k, A.dim))
    np.add.at(locs, labels, tr[:, None] * A.locations)
    counts = np.bincount(labels, minlength=k)
    _, first = np.unique(labels, return_index=True)
    ok = (counts > 1) & (mass > 0)
    locs[ok] /= mass[ok, None]
    locs[~ok] = A.locations[first[~ok]]
    return OperatorValuedMeasure.from_atoms(locs, vals)


def apply_transfer(ifs, F, B, grid=None):
    """``B -> sum_i F_i^* B(s_i^{-1}(.)) F_i`` on finitely supported measures."""
    if len(F) != ifs.N:
        raise ValueError(f"{len(F)} operators for an IFS with {ifs.N} maps")
    if F.hilbert_dim != B.hilbert_dim:
        raise ValueError("operator family and measure act on different spaces")
    defect = F.identity_defect()
    if defect > FAMILY_TOL:
        raise ValidationError(f"sum F_i^* F_i differs from the identity by {defect:.3e}")
    locs = np.concatenate([m(B.locations) for m in ifs.maps])
    vals = np.concatenate([
        np.einsum("ba,kbc,cd->kad", Fi.conj(), B.values, Fi) for Fi in F.operators])
    out = OperatorValuedMeasure.from_atoms(locs, vals)
    if grid is not None:
        out = quantize_operator_measure(out, grid)
    return out


@dataclass
class OperatorFixedPointResult:
    measure: OperatorValuedMeasure
    residuals: list = field(default_factory=list)
    normalization_defects: list = field(default_factory=list)
    atom_counts: list = field(default_factory=list)
    budget: float = 0.0
    contraction: float = 0.0

    @property
    def iterations(self):
        return len(self.residuals)


def fixed_point_operator_measure(ifs, F, B0=None, tol=1e-9, max_iter=200, grid=None,
                                 budget=None, restarts=4, seed=0):
    """Iterate :func:`apply_transfer` until successive iterates are rho-close.

    Stops when ``rho(B_{n+1}, B_n) <= tol + budget``.  ``budget`` defaults to
    the grid displacement over ``1 - c_max`` (zero without a grid).  The start
    ``B0`` defaults to the identity at the fixed point of the first map.
    """
    if not tol > 0:
        raise ValueError("tol must be > 0")
    B = OperatorValuedMeasure.delta(default_seed(ifs), F.hilbert_dim) if B0 is None else B0
    if budget is None:
        budget = 0.0 if grid is None else grid.displacement(ifs.dim) / (1.0 - ifs.c_max)
    result = OperatorFixedPointResult(B, budget=budget, contraction=ifs.c_max)
    for _ in range(max_iter):
        nxt = apply_transfer(ifs, F, B, grid)
        r = rho_distance(nxt, B, restarts=restarts, seed=seed).value
        result.residuals.append(r)
        result.normalization_defects.append(validate_povm(nxt).normalization_defect)
        result.atom_counts.append(len(nxt))
        B = nxt
        if r <= tol + budget:
            result.measure = B
            return result
    raise ConvergenceError(
        f"no convergence after {max_iter} iterations (last residual {result.residuals[-1]:.3e})",
        residual=result.residuals[-1], history=result.residuals)


def support(A, threshold=0.0):
    """Locations whose atom has operator norm above ``threshold``."""
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    keep = A.atom_norms() > threshold
    return PointCloud.from_points(A.locations[keep].reshape(-1, A.dim), 0.0)


def psi_metric(N1, N2, restarts=32, seed=0, cluster_tol=1e-8):
    """rho between the spectral measures of two normal matrices."""
    N1, N2 = as_operator(N1), as_operator(N2)
    if N1.shape != N2.shape:
        raise ValueError(f"matrix shapes differ: {N1.shape} vs {N2.shape}")
    return rho_distance(spectral_pvm(N1, cluster_tol), spectral_pvm(N2, cluster_tol),
                        restarts=restarts, seed=seed)


def random_povm(rng, locations, hilbert_dim, rank=None):
    """A random POVM on the given locations, built from a random isometry."""
    locations = np.atleast_2d(np.asarray(locations, dtype=float))
    k, n = locations.shape[0], hilbert_dim
    r = rank or n
    G = rng.normal(size=(k * r, n)) + 1j * rng.normal(size=(k * r, n))
    Q, _ = np.linalg.qr(G)
    blocks = Q.reshape(k, r, n)
    vals = np.einsum("kri,krj->kij", blocks.conj(), blocks)
    return OperatorValuedMeasure.from_atoms(locations, vals)
