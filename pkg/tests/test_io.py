import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from opkant import io
from opkant.opmeasure import random_povm
from opkant.transport import DiscreteMeasure


def test_points_roundtrip(tmp_path, rng):
    pts = rng.normal(size=(5, 3))
    io.write_points_csv(tmp_path / "p.csv", pts)
    np.testing.assert_array_equal(io.read_points_csv(tmp_path / "p.csv"), pts)


def test_measure_roundtrip(tmp_path):
    mu = DiscreteMeasure.from_atoms([[0.1, 0.2], [1 / 3, 0.0]], [0.25, 0.75])
    io.write_measure_csv(tmp_path / "m.csv", mu)
    assert (tmp_path / "m.csv").read_text().splitlines()[0] == "x0,x1,weight"
    back = io.read_measure_csv(tmp_path / "m.csv")
    np.testing.assert_array_equal(back.points, mu.points)
    np.testing.assert_array_equal(back.weights, mu.weights)


@pytest.mark.parametrize("text, message", [
    ("x0,w\n0,1\n", "weight"),
    ("x0,weight\n0,abc\n", "could not convert"),
    ("x0,weight\n0,1,2\n", "columns"),
    ("x0,weight\n", "columns"),
    ("", "empty"),
])
def test_measure_csv_errors(tmp_path, text, message):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(ValueError, match=message):
        io.read_measure_csv(path)


def test_matrix_roundtrip(tmp_path, rng):
    M = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    io.write_matrix_csv(tmp_path / "m.csv", M)
    np.testing.assert_array_equal(io.read_matrix_csv(tmp_path / "m.csv"), M)


def test_matrix_must_be_square(tmp_path):
    (tmp_path / "m.csv").write_text("re0,im0,re1,im1\n1,0,0,0\n")
    with pytest.raises(ValueError, match="square"):
        io.read_matrix_csv(tmp_path / "m.csv")


def test_operator_measure_roundtrip(tmp_path, rng):
    A = random_povm(rng, rng.normal(size=(4, 2)), 3)
    io.save_operator_measure(tmp_path / "A", A, {"tol": 1e-9})
    manifest = json.loads((tmp_path / "A" / "manifest.json").read_text())
    assert manifest["hilbert_dim"] == 3 and len(manifest["atoms"]) == 4
    B = io.load_operator_measure(tmp_path / "A")
    np.testing.assert_array_equal(B.locations, A.locations)
    np.testing.assert_array_equal(B.values, A.values)


def test_operator_measure_missing_manifest(tmp_path):
    with pytest.raises(FileNotFoundError):
        io.load_operator_measure(tmp_path)


def test_report_formatting():
    text = io.dumps_report({"b": 0.1, "a": [1, 2.5], "nested": {"flag": True, "none": None},
                            "arr": np.array([1 / 3]), "bad": float("nan")})
    assert text.index('"b"') < text.index('"a"')
    assert "0.10000000000000001" in text
    assert "0.33333333333333331" in text
    data = json.loads(text)
    assert data["bad"] == "nan"
    assert data["nested"] == {"flag": True, "none": None}


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_report_floats_roundtrip(x):
    assert json.loads(io.dumps_report({"x": x}))["x"] == x


def test_report_is_deterministic():
    obj = {"v": [np.float64(0.1) * k for k in range(10)], "m": np.eye(2)}
    assert io.dumps_report(obj) == io.dumps_report(obj)


def test_report_rejects_unknown_types():
    with pytest.raises(TypeError):
        io.dumps_report({"x": object()})
