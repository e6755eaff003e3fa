"""
Command-line front end.  Each subcommand writes ``report.json`` plus CSV data
files (and PNG figures where they help) into ``--out``.

Exit codes: 0 success, 1 a numerical check or tolerance failed, 2 malformed
input or usage, 3 unexpected internal error.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io, plotting
from .errors import (ConvergenceError, InstanceTooLargeError, MassMismatchError,
                     ValidationError)
from .hutchinson import QuantizationGrid, hutchinson_fixed_point
from .ifs import BUNDLED_CONFIGS, attractor_approximation, attractor_error_bound, resolve_ifs
from .metric import DEDUP_TOL, hausdorff_distance
from .opmeasure import (OperatorFamily, fixed_point_operator_measure, psi_metric,
                        rho_distance, rho_vertex_oracle, support, validate_povm)
from .symbolic import build_geometric_operators, symbolic_sweep
from .transport import w1_distance

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3


class InputError(Exception):
    """Unreadable or malformed user input; maps to exit code 2."""


class CheckFailed(Exception):
    """A computed quantity missed its tolerance; maps to exit code 1."""


def _load(fn, *args):
    try:
        return fn(*args)
    except FileNotFoundError as exc:
        raise InputError(f"file not found: {exc.filename or exc}") from None
    except (OSError, ValueError, KeyError) as exc:
        raise InputError(str(exc)) from None


def _ifs(args):
    if args.config is None:
        raise InputError("--config is required (a file path or one of: "
                         + ", ".join(BUNDLED_CONFIGS) + ")")
    return _load(resolve_ifs, args.config)


def _out(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _ifs_summary(ifs):
    return {"maps": ifs.N, "dimension": ifs.dim, "c_max": ifs.c_max,
            "average_contraction": ifs.average_contraction,
            "diameter_bound": ifs.diameter_bound()}


def _write_residuals(path, residuals, counts):
    with open(path, "w") as fh:
        fh.write("iter,residual,atom_count\n")
        for k, (r, c) in enumerate(zip(residuals, counts), 1):
            fh.write(f"{k},{float(r)!r},{int(c)}\n")


def cmd_attractor(args):
    ifs = _ifs(args)
    K = 8 if args.depth is None else args.depth
    cloud = attractor_approximation(ifs, depth=K, dedup_tol=args.dedup_tol)
    out = _out(args)
    io.write_points_csv(out / "points.csv", cloud.points)
    plotting.plot_points(out / "attractor.png", cloud.points, f"depth-{K} attractor approximation")
    io.write_json(out / "report.json", {
        "command": "attractor", "config": str(args.config), "ifs": _ifs_summary(ifs),
        "depth": K, "points": len(cloud), "hausdorff_error_bound": attractor_error_bound(ifs, K),
        "files": ["points.csv", "attractor.png"]})


def cmd_hutchinson(args):
    ifs = _ifs(args)
    K = 7 if args.depth is None else args.depth
    tol = 1e-9 if args.tol is None else args.tol
    cell = args.cell_size if args.cell_size is not None else ifs.c_max ** K
    grid = QuantizationGrid(cell)
    run = hutchinson_fixed_point(ifs, tol=tol, max_iter=args.max_iter, grid=grid)
    out = _out(args)
    _write_residuals(out / "residuals.csv", run.residuals, run.atom_counts)
    io.write_measure_csv(out / "measure.csv", run.measure)
    plotting.plot_residuals(out / "residuals.png", run.residuals,
                            "W1 between successive iterates", floor=run.budget)
    plotting.plot_measure(out / "measure.png", run.measure.points, run.measure.weights,
                          "approximate invariant measure")
    ratios = [b / a for a, b in zip(run.residuals, run.residuals[1:]) if a > 0]
    io.write_json(out / "report.json", {
        "command": "hutchinson", "config": str(args.config), "ifs": _ifs_summary(ifs),
        "tol": tol, "cell_size": cell, "quantization_budget": run.budget,
        "iterations": run.iterations, "atoms": len(run.measure),
        "final_residual": run.residuals[-1],
        "max_residual_ratio": max(ratios) if ratios else None,
        "residuals": run.residuals,
        "files": ["residuals.csv", "measure.csv", "residuals.png", "measure.png"]})


def cmd_w1(args):
    mu = _load(io.read_measure_csv, args.first)
    nu = _load(io.read_measure_csv, args.second)
    res = w1_distance(mu, nu)
    out = _out(args)
    rows, cols = np.nonzero(res.plan)
    plan = [[int(i), int(j), float(res.plan[i, j])] for i, j in zip(rows, cols)]
    with open(out / "plan.csv", "w") as fh:
        fh.write("source,target,mass\n")
        for i, j, m in plan:
            fh.write(f"{i},{j},{m!r}\n")
    with open(out / "potential.csv", "w") as fh:
        fh.write(",".join([f"x{j}" for j in range(res.potential.points.shape[1])] + ["f"]) + "\n")
        for p, v in zip(res.potential.points, res.potential.values):
            fh.write(",".join(repr(float(x)) for x in p) + f",{float(v)!r}\n")
    report = {
        "command": "w1", "first": str(args.first), "second": str(args.second),
        "value": res.value, "duality_gap": res.duality_gap, "pivots": res.pivots,
        "plan": plan,
        "potential": {"points": res.potential.points, "values": res.potential.values,
                      "lipschitz_defect": res.potential.lipschitz_defect()},
        "files": ["plan.csv", "potential.csv"]}
    io.write_json(out / "report.json", report)
    print(io.dumps_report({"value": res.value, "duality_gap": res.duality_gap}), end="")


def _rho_report(A, B, args):
    res = rho_distance(A, B, restarts=args.restarts, seed=args.seed, bounded=args.bounded)
    report = {"value": res.value, "bounded": args.bounded, "restarts": args.restarts,
              "seed": args.seed, "starts": res.ascents,
              "certificate": {"points": res.f.points, "f": res.f.values,
                              "h_re": res.h.real, "h_im": res.h.imag,
                              "lipschitz_defect": res.f.lipschitz_defect()}}
    try:
        exact, _ = rho_vertex_oracle(A, B, bounded=args.bounded)
        report["vertex_oracle"] = exact
        report["oracle_shortfall"] = exact - res.value
    except InstanceTooLargeError:
        report["vertex_oracle"] = None
    return res, report


def cmd_rho(args):
    A = _load(io.load_operator_measure, args.first)
    B = _load(io.load_operator_measure, args.second)
    if (A.hilbert_dim, A.dim) != (B.hilbert_dim, B.dim):
        raise InputError(f"measures differ in shape: Hilbert dimension {A.hilbert_dim} vs "
                         f"{B.hilbert_dim}, ambient dimension {A.dim} vs {B.dim}")
    for name, M in (("first", A), ("second", B)):
        diag = validate_povm(M)
        if not diag.ok(1e-8):
            raise CheckFailed(f"{name} measure is not a POVM: {diag}")
    _, report = _rho_report(A, B, args)
    out = _out(args)
    io.write_json(out / "report.json", {"command": "rho", "first": str(args.first),
                                        "second": str(args.second), **report})
    print(io.dumps_report({"value": report["value"]}), end="")


def cmd_fixpoint(args):
    ifs = _ifs(args)
    K = 4 if args.depth is None else args.depth
    tol = 1e-9 if args.tol is None else args.tol
    if args.family == "geometric":
        geo = build_geometric_operators(ifs, K, args.dedup_tol)
        F = geo.F
        family = {"kind": "geometric", "hilbert_dim": F.hilbert_dim, "snap_distance": geo.snap_distance}
    else:
        F = OperatorFamily.random(np.random.default_rng(args.seed), ifs.N, args.hilbert_dim)
        family = {"kind": "random", "hilbert_dim": F.hilbert_dim, "seed": args.seed}
    family["identity_defect"] = F.identity_defect()
    cell = args.cell_size if args.cell_size is not None else 2 * ifs.c_max ** K
    grid = QuantizationGrid(cell)
    run = fixed_point_operator_measure(ifs, F, tol=tol, max_iter=args.max_iter, grid=grid,
                                       restarts=args.restarts, seed=args.seed)
    out = _out(args)
    io.save_operator_measure(out / "measure", run.measure, {"tol": tol, "cell_size": cell})
    _write_residuals(out / "residuals.csv", run.residuals, run.atom_counts)
    plotting.plot_residuals(out / "residuals.png", run.residuals,
                            "rho between successive iterates", floor=run.budget)
    io.write_json(out / "report.json", {
        "command": "fixpoint", "config": str(args.config), "ifs": _ifs_summary(ifs),
        "depth": K, "family": family, "tol": tol, "cell_size": cell,
        "quantization_budget": run.budget, "contraction": run.contraction,
        "iterations": run.iterations, "atoms": len(run.measure),
        "residuals": run.residuals, "normalization_defects": run.normalization_defects,
        "files": ["measure/", "residuals.csv", "residuals.png"]})


def cmd_support(args):
    A = _load(io.load_operator_measure, args.measure)
    supp = support(A, args.threshold)
    out = _out(args)
    io.write_points_csv(out / "support.csv", supp.points)
    report = {"command": "support", "measure": str(args.measure), "threshold": args.threshold,
              "points": len(supp), "atoms": len(A)}
    files = ["support.csv"]
    if args.config is not None:
        ifs = _ifs(args)
        K = 6 if args.depth is None else args.depth
        cloud = attractor_approximation(ifs, depth=K, dedup_tol=args.dedup_tol)
        h = hausdorff_distance(supp, cloud)
        bound = 2 * attractor_error_bound(ifs, K)
        report.update({"config": str(args.config), "depth": K, "hausdorff_to_attractor": h,
                       "bound": bound, "within_bound": h <= bound})
        plotting.plot_support(out / "support.png", supp.points, cloud.points,
                              "support against the attractor approximation")
        files.append("support.png")
    report["files"] = files
    io.write_json(out / "report.json", report)
    if report.get("within_bound") is False:
        raise CheckFailed(f"support lies {report['hausdorff_to_attractor']:.3e} from the "
                          f"attractor, above the bound {report['bound']:.3e}")


def cmd_symbolic_check(args):
    K = 4 if args.depth is None else args.depth
    tol = 1e-12 if args.tol is None else args.tol
    if args.N < 2 or K < 1:
        raise InputError("need N >= 2 and depth >= 1")
    table = symbolic_sweep(args.N, K)
    out = _out(args)
    with open(out / "defects.csv", "w") as fh:
        fh.write("identity,defect\n")
        for k, v in table.items():
            if k not in ("N", "K"):
                fh.write(f"{k},{float(v)!r}\n")
    failed = [k for k, v in table.items() if k not in ("N", "K") and v > tol]
    io.write_json(out / "report.json", {"command": "symbolic-check", "tol": tol, **table,
                                        "failed": failed, "files": ["defects.csv"]})
    print(io.dumps_report(table), end="")
    if failed:
        raise CheckFailed("defects above tolerance: " + ", ".join(failed))


def cmd_psi(args):
    N1 = _load(io.read_matrix_csv, args.first)
    N2 = _load(io.read_matrix_csv, args.second)
    if N1.shape != N2.shape:
        raise InputError(f"matrix shapes differ: {N1.shape} vs {N2.shape}")
    try:
        res = psi_metric(N1, N2, restarts=args.restarts, seed=args.seed)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out = _out(args)
    io.write_json(out / "report.json", {
        "command": "psi", "first": str(args.first), "second": str(args.second),
        "value": res.value, "operator_norm_distance": float(np.linalg.norm(N1 - N2, 2)),
        "certificate": {"points": res.f.points, "f": res.f.values,
                        "h_re": res.h.real, "h_im": res.h.imag}})
    print(io.dumps_report({"value": res.value}), end="")


def cmd_verify_all(args):
    from .acceptance import run_all

    if args.config is not None:
        _ifs(args)
    results = run_all(seed=args.seed, echo=print)
    out = _out(args)
    with open(out / "acceptance.csv", "w") as fh:
        fh.write("criterion,name,passed\n")
        for r in results:
            fh.write(f"{r.number},{r.name},{str(r.passed).lower()}\n")
    io.write_json(out / "report.json", {
        "command": "verify-all", "seed": args.seed,
        "passed": sum(r.passed for r in results), "total": len(results),
        "criteria": [{"number": r.number, "name": r.name, "passed": r.passed, "detail": r.detail}
                     for r in results]})
    failed = [r.name for r in results if not r.passed]
    if failed:
        raise CheckFailed("acceptance failures: " + ", ".join(failed))


def _positive(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return v


def _nonnegative_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return v


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="IFS config file or bundled name (" + ", ".join(BUNDLED_CONFIGS) + ")")
    common.add_argument("--depth", type=_nonnegative_int, help="word depth K")
    common.add_argument("--tol", type=_positive, help="stopping or check tolerance")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--dedup-tol", type=_positive, default=DEDUP_TOL)

    parser = argparse.ArgumentParser(
        prog="opkant", description="Kantorovich metrics, iterated function systems and "
                                   "operator-valued measures.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("attractor", parents=[common], help="depth-K attractor point cloud")
    p.set_defaults(func=cmd_attractor)

    p = sub.add_parser("hutchinson", parents=[common], help="invariant measure by iteration")
    p.add_argument("--cell-size", type=_positive, help="quantization cell (default c_max**depth)")
    p.add_argument("--max-iter", type=int, default=200)
    p.set_defaults(func=cmd_hutchinson)

    p = sub.add_parser("w1", parents=[common], help="exact W1 between two measure CSVs")
    p.add_argument("first")
    p.add_argument("second")
    p.set_defaults(func=cmd_w1)

    p = sub.add_parser("rho", parents=[common], help="rho between two operator measures")
    p.add_argument("first", help="operator-measure directory")
    p.add_argument("second", help="operator-measure directory")
    p.add_argument("--restarts", type=_nonnegative_int, default=32)
    p.add_argument("--bounded", action="store_true", help="modified metric (|f| <= 1)")
    p.set_defaults(func=cmd_rho)

    p = sub.add_parser("fixpoint", parents=[common], help="fixed point of the transfer map")
    p.add_argument("--family", choices=("geometric", "random"), default="geometric")
    p.add_argument("--hilbert-dim", type=int, default=2, help="dimension for --family random")
    p.add_argument("--cell-size", type=_positive, help="quantization cell (default 2*c_max**depth)")
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--restarts", type=_nonnegative_int, default=4)
    p.set_defaults(func=cmd_fixpoint)

    p = sub.add_parser("support", parents=[common], help="support of an operator measure")
    p.add_argument("measure", help="operator-measure directory")
    p.add_argument("--threshold", type=float, default=1e-12)
    p.set_defaults(func=cmd_support)

    p = sub.add_parser("symbolic-check", parents=[common], help="symbol-space identity sweep")
    p.add_argument("--N", type=int, default=2, help="alphabet size")
    p.set_defaults(func=cmd_symbolic_check)

    p = sub.add_parser("psi", parents=[common], help="Psi distance between two normal matrices")
    p.add_argument("first", help="matrix CSV")
    p.add_argument("second", help="matrix CSV")
    p.add_argument("--restarts", type=_nonnegative_int, default=32)
    p.set_defaults(func=cmd_psi)

    p = sub.add_parser("verify-all", parents=[common], help="run the acceptance suite")
    p.set_defaults(func=cmd_verify_all)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MassMismatchError as exc:
        print(f"error: mass mismatch: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except (CheckFailed, ValidationError, ConvergenceError, InstanceTooLargeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
