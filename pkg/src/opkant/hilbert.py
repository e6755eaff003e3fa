"""
Dense finite-dimensional Hilbert-space helpers: Hermitian checks, operator
norm, positivity and projection predicates, spectral projections.

Operators are plain complex numpy arrays in an orthonormal basis.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionError

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
NORMAL_TOL = 1e-10


def as_operator(M):
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise DimensionError(f"expected a nonempty square matrix, got shape {M.shape}")
    return M


def hermitian_defect(M):
    M = as_operator(M)
    return float(np.abs(M - M.conj().T).max())


def as_hermitian(M, tol=HERMITIAN_TOL):
    """Validate ``M`` as Hermitian (relative to its scale) and symmetrize it."""
    M = as_operator(M)
    scale = max(1.0, float(np.abs(M).max()))
    if hermitian_defect(M) > tol * scale:
        raise ValueError(f"matrix is not Hermitian (defect {hermitian_defect(M):.3e})")
    return 0.5 * (M + M.conj().T)


def operator_norm(M):
    """Operator norm of a Hermitian matrix, i.e. its largest ``|eigenvalue|``."""
    H = as_hermitian(M)
    return float(np.abs(np.linalg.eigvalsh(H)).max())


def min_eigenvalue(M):
    return float(np.linalg.eigvalsh(as_hermitian(M, tol=1e-8)).min())


def is_psd(M, tol=PSD_TOL):
    return min_eigenvalue(M) >= -tol


def is_projection(M, tol=1e-10):
    """True iff ``M`` is Hermitian and ``||M^2 - M|| <= tol``."""
    M = as_operator(M)
    if hermitian_defect(M) > tol:
        return False
    H = 0.5 * (M + M.conj().T)
    return operator_norm(H @ H - H) <= tol


def extreme_eigenpair(H):
    """Eigenpair of a Hermitian matrix with the largest ``|eigenvalue|``."""
    w, U = np.linalg.eigh(H)
    k = int(np.argmax(np.abs(w)))
    return float(w[k]), U[:, k]


def weighted_adjoint(M, weights):
    """Adjoint of ``M`` for the inner product ``<f, g> = sum_k w_k f_k conj(g_k)``."""
    w = np.asarray(weights, dtype=float)
    return (M.conj().T * w[None, :]) / w[:, None]


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    projections: np.ndarray

    def reconstruct(self):
        return np.einsum("k,kij->ij", self.eigenvalues, self.projections)


def _cluster_eigenvalues(values, tol):
    order = np.lexsort((values.imag, values.real))
    groups = []
    for k in order:
        for g in groups:
            if np.abs(values[g] - values[k]).min() <= tol:
                g.append(k)
                break
        else:
            groups.append([k])
    return groups


def normality_defect(M):
    M = as_operator(M)
    return float(np.linalg.norm(M @ M.conj().T - M.conj().T @ M, 2))


def spectral_decomposition(M, cluster_tol=1e-8):
    """Eigenvalues and spectral projections of a normal matrix.

    The complex Schur form of a normal matrix is diagonal, which gives an
    orthonormal eigenbasis even for repeated eigenvalues.  Eigenvalues closer
    than ``cluster_tol`` share one projection, placed at the cluster mean.
    """
    M = as_operator(M)
    scale = max(1.0, float(np.abs(M).max()))
    if normality_defect(M) > NORMAL_TOL * scale ** 2:
        raise ValueError(f"matrix is not normal (defect {normality_defect(M):.3e})")
    T, Z = scipy.linalg.schur(M, output="complex")
    values = np.diag(T)
    lam = []
    projections = []
    for g in _cluster_eigenvalues(values, cluster_tol):
        Zg = Z[:, g]
        lam.append(values[g].mean())
        projections.append(Zg @ Zg.conj().T)
    return SpectralDecomposition(np.array(lam), np.array(projections))


def spectral_pvm(M, cluster_tol=1e-8):
    """Projection-valued measure of a normal matrix, atoms at eigenvalues in R^2."""
    from .opmeasure import OperatorValuedMeasure

    dec = spectral_decomposition(M, cluster_tol)
    locs = np.column_stack([dec.eigenvalues.real, dec.eigenvalues.imag])
    return OperatorValuedMeasure.from_atoms(locs, dec.projections, dedup_tol=0.0)
