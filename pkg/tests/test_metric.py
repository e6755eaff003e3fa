import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from opkant.errors import DimensionError
from opkant.metric import (PointCloud, cluster_representatives, directed_hausdorff, distance,
                           hausdorff_distance, pairwise_distances)

coords = st.floats(-100, 100, allow_nan=False)


def exhaustive_hausdorff(S, T):
    """Definition-level oracle: explicit double loops."""
    def directed(A, B):
        return max(min(float(np.sqrt(sum((a - b) ** 2))) for b in B) for a in A)
    return max(directed(S, T), directed(T, S))


def test_distance_hand_values():
    assert distance([0, 0], [3, 4]) == 5.0
    assert distance([1.5], [1.5]) == 0.0
    assert distance([-1], [2]) == 3.0


def test_distance_dimension_mismatch():
    with pytest.raises(DimensionError):
        distance([0, 0], [0, 0, 0])


def test_distance_rejects_nonfinite():
    with pytest.raises(ValueError):
        distance([np.nan], [0.0])


@given(arrays(float, 3, elements=coords), arrays(float, 3, elements=coords),
       arrays(float, 3, elements=coords))
def test_distance_metric_axioms(p, q, r):
    assert distance(p, q) == distance(q, p)
    assert distance(p, p) == 0.0
    assert distance(p, r) <= distance(p, q) + distance(q, r) + 1e-9


def test_pairwise_matches_scalar_distance(rng):
    X, Y = rng.normal(size=(5, 2)), rng.normal(size=(4, 2))
    D = pairwise_distances(X, Y)
    for i, j in itertools.product(range(5), range(4)):
        assert D[i, j] == pytest.approx(distance(X[i], Y[j]), abs=1e-14)


def test_cloud_dedups_and_sorts():
    cloud = PointCloud.from_points([[1.0, 0.0], [0.0, 1.0], [1.0 + 1e-12, 0.0]], 1e-9)
    assert len(cloud) == 2
    np.testing.assert_array_equal(cloud.points, [[0.0, 1.0], [1.0, 0.0]])
    assert cloud.dim == 2


def test_cloud_zero_tolerance_keeps_near_points():
    assert len(PointCloud.from_points([[0.0], [1e-12], [0.0]], 0.0)) == 2


def test_cloud_is_read_only():
    cloud = PointCloud.from_points([[0.0], [1.0]])
    with pytest.raises(ValueError):
        cloud.points[0, 0] = 5.0


def test_cloud_diameter():
    assert PointCloud.from_points([[0, 0], [3, 4], [1, 1]]).diameter() == 5.0
    assert PointCloud.from_points([[2.0]]).diameter() == 0.0


def test_cluster_labels_cover_all_rows():
    pts = np.array([[0.0], [0.5], [1e-12], [0.5 + 1e-12]])
    reps, labels = cluster_representatives(pts, 1e-9)
    assert len(reps) == 2
    assert labels[0] == labels[2] and labels[1] == labels[3]


@given(st.lists(st.tuples(coords, coords), min_size=1, max_size=8),
       st.lists(st.tuples(coords, coords), min_size=1, max_size=8))
def test_hausdorff_matches_exhaustive_oracle(S, T):
    S, T = np.array(S), np.array(T)
    assert hausdorff_distance(S, T) == pytest.approx(exhaustive_hausdorff(S, T), abs=1e-9)


def test_hausdorff_hand_value():
    assert hausdorff_distance([[0.0], [1.0]], [[0.0]]) == 1.0
    assert directed_hausdorff([[0.0]], [[0.0], [1.0]]) == 0.0


def test_hausdorff_errors():
    with pytest.raises(ValueError):
        hausdorff_distance(np.zeros((0, 1)), [[0.0]])
    with pytest.raises(DimensionError):
        hausdorff_distance([[0.0, 1.0]], [[0.0]])
