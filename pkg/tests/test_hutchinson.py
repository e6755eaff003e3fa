import numpy as np
import pytest
import scipy.stats
from hypothesis import given
from hypothesis import strategies as st

from opkant.errors import ConvergenceError
from opkant.hutchinson import (QuantizationGrid, contraction_ratio_report, group_by_cell,
                               hutchinson_fixed_point, hutchinson_iterate, hutchinson_step,
                               quantization_budget, quantize, random_measure)
from opkant.ifs import attractor_approximation
from opkant.metric import hausdorff_distance
from opkant.transport import DiscreteMeasure, w1_distance


def test_step_on_dirac(cantor):
    mu = hutchinson_step(cantor, DiscreteMeasure.dirac([0.0]))
    np.testing.assert_allclose(mu.points.ravel(), [0.0, 2 / 3])
    np.testing.assert_allclose(mu.weights, [0.5, 0.5])


def test_iterate_is_uniform_on_word_points(cantor):
    mu = hutchinson_iterate(cantor, 5)
    assert len(mu) == 32
    np.testing.assert_allclose(mu.weights, 1 / 32)
    cloud = attractor_approximation(cantor, depth=5)
    np.testing.assert_allclose(mu.points, cloud.points)


def test_cantor_invariant_measure_moments(cantor):
    # the Cantor measure has mean 1/2 and variance 1/8
    mu = hutchinson_iterate(cantor, 14)
    mean = mu.integrate(lambda x: x[:, 0])
    var = mu.integrate(lambda x: (x[:, 0] - 0.5) ** 2)
    assert mean == pytest.approx(0.5, abs=1e-6)
    assert var == pytest.approx(1 / 8, abs=1e-6)


def test_fixed_point_converges_with_grid(cantor):
    grid = QuantizationGrid(1e-4)
    run = hutchinson_fixed_point(cantor, tol=1e-8, grid=grid)
    assert run.residuals[-1] <= 1e-8 + run.budget
    assert run.measure.is_probability(1e-12)
    ref = hutchinson_iterate(cantor, 12)
    assert w1_distance(run.measure, ref).value <= 2 * run.budget + 3.0 ** -12 * 1.5


def test_residuals_contract_by_average_ratio(sierpinski):
    run = hutchinson_fixed_point(sierpinski, tol=1e-12, grid=QuantizationGrid(1 / 64), max_iter=50)
    r = run.residuals
    for a, b in zip(r, r[1:]):
        assert b <= 0.5 * a + 2 * quantization_budget(sierpinski, QuantizationGrid(1 / 64)) * 0.5 + 1e-12


def test_convergence_error_carries_history(cantor):
    with pytest.raises(ConvergenceError) as info:
        hutchinson_fixed_point(cantor, tol=1e-12, max_iter=3)
    assert len(info.value.history) == 3
    assert info.value.residual == info.value.history[-1]


def test_tol_must_be_positive(cantor):
    with pytest.raises(ValueError):
        hutchinson_fixed_point(cantor, tol=0.0)


def test_contraction_report_below_average(cantor, sierpinski, dyadic):
    for ifs in (cantor, sierpinski, dyadic):
        ratio = contraction_ratio_report(ifs, trials=40, seed=3)
        assert 0 < ratio <= ifs.average_contraction + 1e-9


def test_grid_cells_and_grouping():
    grid = QuantizationGrid(0.5)
    np.testing.assert_array_equal(grid.cells([[0.1], [0.6], [-0.1]]).ravel(), [0, 1, -1])
    labels, k = group_by_cell(grid, np.array([[0.6], [0.1], [0.2]]))
    assert k == 2
    np.testing.assert_array_equal(labels, [1, 0, 0])
    assert grid.displacement(2) == pytest.approx(np.sqrt(2) / 2)
    with pytest.raises(ValueError):
        QuantizationGrid(0.0)


def test_quantize_merges_at_centroid():
    mu = DiscreteMeasure.from_atoms([[0.1], [0.3], [0.7]], [0.25, 0.25, 0.5])
    q = quantize(mu, QuantizationGrid(0.5))
    np.testing.assert_allclose(q.points.ravel(), [0.2, 0.7])
    np.testing.assert_allclose(q.weights, [0.5, 0.5])


@given(st.integers(0, 2 ** 31), st.floats(0.01, 1.0))
def test_quantize_preserves_mass_and_moves_little(seed, cell):
    rng = np.random.default_rng(seed)
    mu = random_measure(rng, 2, 8, -1, 1)
    grid = QuantizationGrid(cell)
    q = quantize(mu, grid)
    assert q.total_mass == pytest.approx(mu.total_mass, abs=1e-12)
    assert w1_distance(mu, q).value <= grid.displacement(2) + 1e-12


def test_invariant_measure_support_is_attractor(sierpinski):
    mu = hutchinson_iterate(sierpinski, 6)
    assert hausdorff_distance(mu.points, attractor_approximation(sierpinski, depth=6)) == 0.0


def test_dyadic_fixed_point_is_uniform(dyadic):
    # the invariant measure of the two halves is Lebesgue measure on [0, 1]
    mu = hutchinson_iterate(dyadic, 10)
    grid = np.linspace(0, 1, 2001)
    d = scipy.stats.wasserstein_distance(mu.points.ravel(), grid, mu.weights)
    assert d <= 2.0 ** -10
