import json
import subprocess
import sys

import numpy as np
import pytest

from opkant import cli, io
from opkant.opmeasure import OperatorValuedMeasure


def run(args, tmp_path):
    return cli.main(list(args) + ["--out", str(tmp_path / "out")])


def report(tmp_path):
    return json.loads((tmp_path / "out" / "report.json").read_text())


def write_measure(path, rows):
    path.write_text("x0,weight\n" + "".join(f"{x},{w}\n" for x, w in rows))
    return str(path)


def test_attractor(tmp_path):
    assert run(["attractor", "--config", "cantor", "--depth", "4"], tmp_path) == 0
    rep = report(tmp_path)
    assert rep["points"] == 16
    assert (tmp_path / "out" / "points.csv").is_file()
    assert (tmp_path / "out" / "attractor.png").stat().st_size > 0


def test_hutchinson(tmp_path):
    assert run(["hutchinson", "--config", "sierpinski", "--depth", "4"], tmp_path) == 0
    rep = report(tmp_path)
    assert rep["max_residual_ratio"] <= 0.5 + 0.02
    lines = (tmp_path / "out" / "residuals.csv").read_text().splitlines()
    assert lines[0] == "iter,residual,atom_count"
    assert len(lines) == rep["iterations"] + 1
    mu = io.read_measure_csv(tmp_path / "out" / "measure.csv")
    assert mu.total_mass == pytest.approx(1.0)


def test_w1(tmp_path, capsys):
    a = write_measure(tmp_path / "a.csv", [(0, 0.5), (1, 0.5)])
    b = write_measure(tmp_path / "b.csv", [(0.5, 1.0)])
    assert run(["w1", a, b], tmp_path) == 0
    rep = report(tmp_path)
    assert rep["value"] == 0.5
    assert rep["potential"]["lipschitz_defect"] == 0
    assert json.loads(capsys.readouterr().out)["value"] == 0.5


def test_w1_mass_mismatch_exits_one(tmp_path, capsys):
    a = write_measure(tmp_path / "a.csv", [(0, 1.0)])
    b = write_measure(tmp_path / "b.csv", [(1, 0.7)])
    assert run(["w1", a, b], tmp_path) == 1
    assert "mass" in capsys.readouterr().err


def test_missing_config_exits_two(tmp_path, capsys):
    assert run(["attractor", "--config", str(tmp_path / "none.ifs")], tmp_path) == 2
    assert "not found" in capsys.readouterr().err


def test_malformed_config_exits_two(tmp_path):
    bad = tmp_path / "bad.ifs"
    bad.write_text("0.5 0 1\n")
    assert run(["attractor", "--config", str(bad)], tmp_path) == 2


def test_config_required(tmp_path):
    assert run(["attractor"], tmp_path) == 2


def test_bad_flag_value_exits_two(tmp_path):
    with pytest.raises(SystemExit) as info:
        run(["attractor", "--config", "cantor", "--tol", "-1"], tmp_path)
    assert info.value.code == 2


def test_fixpoint_support_and_rho(tmp_path):
    assert run(["fixpoint", "--config", "cantor", "--depth", "3"], tmp_path) == 0
    rep = report(tmp_path)
    assert max(rep["normalization_defects"]) <= 1e-10
    measure = tmp_path / "out" / "measure"
    A = io.load_operator_measure(measure)
    assert A.hilbert_dim == 8

    out2 = tmp_path / "s"
    assert cli.main(["support", str(measure), "--config", "cantor", "--depth", "3",
                     "--out", str(out2)]) == 0
    srep = json.loads((out2 / "report.json").read_text())
    assert srep["within_bound"] is True

    out3 = tmp_path / "r"
    assert cli.main(["rho", str(measure), str(measure), "--out", str(out3)]) == 0
    assert json.loads((out3 / "report.json").read_text())["value"] == 0


def test_fixpoint_overlap_family_fails(tmp_path, capsys):
    assert run(["fixpoint", "--config", "overlap", "--depth", "3"], tmp_path) == 1
    assert "identity" in capsys.readouterr().err


def test_rho_projection_example(tmp_path):
    P = np.diag([1.0, 0.0])
    io.save_operator_measure(tmp_path / "A", OperatorValuedMeasure.from_atoms([[0.0], [2.5]], [P, np.eye(2) - P]))
    io.save_operator_measure(tmp_path / "B", OperatorValuedMeasure.from_atoms([[0.0], [2.5]], [np.eye(2) - P, P]))
    assert run(["rho", str(tmp_path / "A"), str(tmp_path / "B")], tmp_path) == 0
    rep = report(tmp_path)
    assert rep["value"] == pytest.approx(2.5)
    assert rep["vertex_oracle"] == pytest.approx(2.5)


def test_rho_rejects_non_povm(tmp_path):
    io.save_operator_measure(tmp_path / "A", OperatorValuedMeasure.from_atoms([[0.0]], [np.diag([1.0, 0.5])]))
    assert run(["rho", str(tmp_path / "A"), str(tmp_path / "A")], tmp_path) == 1


def test_symbolic_check(tmp_path):
    assert run(["symbolic-check", "--N", "3", "--depth", "3"], tmp_path) == 0
    rep = report(tmp_path)
    assert rep["failed"] == []
    assert rep["cylinder_identity_defect"] <= 1e-12


def test_psi(tmp_path):
    io.write_matrix_csv(tmp_path / "a.csv", np.diag([0.0, 1.0]))
    io.write_matrix_csv(tmp_path / "b.csv", np.diag([0.25, 1.25]))
    assert run(["psi", str(tmp_path / "a.csv"), str(tmp_path / "b.csv")], tmp_path) == 0
    assert report(tmp_path)["value"] == pytest.approx(0.25)


def test_psi_non_normal_exits_two(tmp_path):
    io.write_matrix_csv(tmp_path / "a.csv", np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert run(["psi", str(tmp_path / "a.csv"), str(tmp_path / "a.csv")], tmp_path) == 2


def test_internal_error_exits_three(tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise RuntimeError("boom")
    monkeypatch.setattr(cli, "attractor_approximation", boom)
    assert run(["attractor", "--config", "cantor"], tmp_path) == 3


def test_reports_are_byte_identical(tmp_path):
    for name in ("a", "b"):
        assert cli.main(["fixpoint", "--config", "cantor", "--depth", "2",
                         "--out", str(tmp_path / name)]) == 0
    for f in ("report.json", "residuals.csv", "residuals.png", "measure/atom_0.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "opkant", "attractor", "--config", "dyadic",
                           "--depth", "3", "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert json.loads((tmp_path / "report.json").read_text())["points"] == 8
