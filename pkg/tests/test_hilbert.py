import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from opkant.errors import DimensionError
from opkant.hilbert import (as_hermitian, extreme_eigenpair, is_projection, is_psd,
                            normality_defect, operator_norm, spectral_decomposition, spectral_pvm,
                            weighted_adjoint)
from opkant.opmeasure import validate_pvm


def power_iteration_norm(H, iters=3000):
    """Oracle: ||H|| = sqrt(largest eigenvalue of H^2) by power iteration."""
    M = H.conj().T @ H
    v = np.ones(H.shape[0], dtype=complex) + 0.1j * np.arange(H.shape[0])
    for _ in range(iters):
        v = M @ v
        v /= np.linalg.norm(v)
    return float(np.sqrt(np.real(v.conj() @ M @ v)))


def random_hermitian(rng, n):
    G = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return G + G.conj().T


@given(st.integers(0, 2 ** 31), st.integers(1, 5))
def test_operator_norm_matches_power_iteration(seed, n):
    H = random_hermitian(np.random.default_rng(seed), n)
    assert operator_norm(H) == pytest.approx(power_iteration_norm(H), rel=1e-6)


def test_operator_norm_hand_values():
    assert operator_norm(np.diag([1.0, -3.0])) == 3.0
    assert operator_norm([[0, 1], [1, 0]]) == pytest.approx(1.0)


def test_operator_norm_requires_hermitian():
    with pytest.raises(ValueError, match="Hermitian"):
        operator_norm([[0, 1], [0, 0]])
    with pytest.raises(DimensionError):
        operator_norm(np.zeros((2, 3)))


def test_as_hermitian_symmetrizes_roundoff():
    M = np.array([[1.0, 2.0 + 1e-15], [2.0, 1.0]])
    H = as_hermitian(M)
    assert np.array_equal(H, H.conj().T)


def test_psd_and_projection_predicates():
    assert is_psd(np.diag([0.0, 1.0]))
    assert not is_psd(np.diag([-1e-6, 1.0]))
    P = np.array([[0.5, 0.5], [0.5, 0.5]])
    assert is_projection(P)
    assert not is_projection(0.9 * P)
    assert not is_projection(np.array([[1.0, 1.0], [0.0, 0.0]]))


def test_extreme_eigenpair_picks_largest_magnitude():
    lam, v = extreme_eigenpair(np.diag([1.0, -4.0, 2.0]))
    assert lam == -4.0
    assert abs(v[1]) == pytest.approx(1.0)


def test_weighted_adjoint_definition(rng):
    M = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    w = rng.uniform(0.1, 1.0, size=4)
    Ms = weighted_adjoint(M, w)
    f = rng.normal(size=4) + 1j * rng.normal(size=4)
    g = rng.normal(size=4) + 1j * rng.normal(size=4)

    def inner(a, b):
        return np.sum(w * a * b.conj())
    assert inner(M @ f, g) == pytest.approx(inner(f, Ms @ g), abs=1e-12)


def test_spectral_decomposition_reconstructs_normal_matrix(rng):
    Q, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    lam = np.array([1 + 1j, 1 + 1j, -2.0, 0.5j])
    N = Q @ np.diag(lam) @ Q.conj().T
    dec = spectral_decomposition(N)
    assert len(dec.eigenvalues) == 3
    np.testing.assert_allclose(dec.reconstruct(), N, atol=1e-12)
    ranks = sorted(round(np.trace(P).real) for P in dec.projections)
    assert ranks == [1, 1, 2]


def test_spectral_pvm_is_a_pvm(rng):
    H = random_hermitian(rng, 5)
    E = spectral_pvm(H)
    assert validate_pvm(E).max_defect() <= 1e-10
    assert E.dim == 2
    np.testing.assert_allclose(E.locations[:, 1], 0.0, atol=1e-12)


def test_spectral_rejects_non_normal():
    assert normality_defect([[0, 1], [0, 0]]) > 0.5
    with pytest.raises(ValueError, match="normal"):
        spectral_decomposition([[0, 1], [0, 0]])
