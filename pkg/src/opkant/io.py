"""
File formats: point and measure CSVs, complex matrix CSVs, operator-measure
directories and deterministic JSON reports.

Floats in CSV files use Python's shortest round-trip ``repr``; JSON reports
use 17 significant digits so that identical runs give byte-identical files.
"""

import csv
import json
import math
from pathlib import Path

import numpy as np

from .opmeasure import OperatorValuedMeasure
from .transport import DiscreteMeasure


def _fmt(v):
    return repr(float(v))


def _read_rows(path):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise ValueError(f"{path}: empty file")
    return rows[0], rows[1:]


def _to_floats(path, rows):
    try:
        data = np.array([[float(v) for v in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
    if data.size and not np.all(np.isfinite(data)):
        raise ValueError(f"{path}: non-finite value")
    return data


def write_points_csv(path, points):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{j}" for j in range(points.shape[1])])
        w.writerows([[_fmt(v) for v in row] for row in points])


def read_points_csv(path):
    header, rows = _read_rows(path)
    data = _to_floats(path, rows)
    if data.ndim != 2 or data.shape[0] == 0 or data.shape[1] != len(header):
        raise ValueError(f"{path}: expected {len(header)} columns per row")
    return data


def write_measure_csv(path, mu):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{j}" for j in range(mu.dim)] + ["weight"])
        for p, m in zip(mu.points, mu.weights):
            w.writerow([_fmt(v) for v in p] + [_fmt(m)])


def read_measure_csv(path, dedup_tol=0.0):
    """Coordinate columns followed by a ``weight`` column."""
    header, rows = _read_rows(path)
    if header[-1].strip() != "weight" or len(header) < 2:
        raise ValueError(f"{path}: last column must be 'weight'")
    data = _to_floats(path, rows)
    if data.ndim != 2 or data.shape[0] == 0 or data.shape[1] != len(header):
        raise ValueError(f"{path}: expected {len(header)} columns per row")
    return DiscreteMeasure.from_atoms(data[:, :-1], data[:, -1], dedup_tol)


def write_matrix_csv(path, M):
    """Complex square matrix; each entry takes a real and an imaginary column."""
    M = np.asarray(M, dtype=complex)
    n = M.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"{part}{j}" for j in range(n) for part in ("re", "im")])
        for row in M:
            w.writerow([_fmt(x) for z in row for x in (z.real, z.imag)])


def read_matrix_csv(path):
    header, rows = _read_rows(path)
    data = _to_floats(path, rows)
    if data.ndim != 2 or data.shape[1] % 2 or data.shape[1] != len(header):
        raise ValueError(f"{path}: expected interleaved real/imaginary columns")
    M = data[:, 0::2] + 1j * data[:, 1::2]
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"{path}: matrix is {M.shape[0]}x{M.shape[1]}, not square")
    return M


def save_operator_measure(directory, A, tolerances=None):
    """Write ``locations.csv``, ``atom_<k>.csv`` per atom and ``manifest.json``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_points_csv(d / "locations.csv", A.locations)
    names = []
    width = len(str(max(len(A) - 1, 0)))
    for k, M in enumerate(A.values):
        name = f"atom_{k:0{width}d}.csv"
        write_matrix_csv(d / name, M)
        names.append(name)
    manifest = {
        "hilbert_dim": A.hilbert_dim,
        "ambient_dim": A.dim,
        "atoms": names,
        "tolerances": dict(tolerances or {}),
    }
    write_json(d / "manifest.json", manifest)


def load_operator_measure(directory, dedup_tol=0.0):
    d = Path(directory)
    manifest_path = d / "manifest.json"
    if not manifest_path.is_file():
        raise FileNotFoundError(f"{manifest_path} not found")
    try:
        manifest = json.loads(manifest_path.read_text())
        names = manifest["atoms"]
        n = int(manifest["hilbert_dim"])
    except (ValueError, KeyError, TypeError) as exc:
        raise ValueError(f"{manifest_path}: malformed manifest ({exc})") from None
    locs = read_points_csv(d / "locations.csv")
    if len(names) != locs.shape[0]:
        raise ValueError(f"{d}: {locs.shape[0]} locations but {len(names)} atoms")
    vals = np.array([read_matrix_csv(d / name) for name in names])
    if vals.shape[1:] != (n, n):
        raise ValueError(f"{d}: atoms are not {n}x{n}")
    return OperatorValuedMeasure.from_atoms(locs, vals, dedup_tol)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, Path):
        return str(obj)
    return obj


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return json.dumps(str(obj))
        return format(obj, ".17g")
    if isinstance(obj, (int, str)):
        return json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_report(obj, indent=2):
    """JSON text with insertion-ordered keys and 17-significant-digit floats.

    Non-finite floats become the strings ``"nan"``, ``"inf"`` or ``"-inf"``.
    """
    return _encode(_plain(obj), indent, 0) + "\n"


def write_json(path, obj):
    Path(path).write_text(dumps_report(obj))
