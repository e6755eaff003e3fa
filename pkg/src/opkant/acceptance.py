"""
End-to-end acceptance checks, each returning a pass/fail verdict with the
measured quantities.

Every check is deterministic given ``seed`` and runs at desk scale; the whole
suite takes on the order of a minute.  ``run_all`` is shared by the test
suite and the ``verify-all`` subcommand.
"""

import functools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .hilbert import is_projection
from .hutchinson import (QuantizationGrid, contraction_ratio_report, hutchinson_fixed_point,
                         hutchinson_iterate, random_measure)
from .ifs import attractor_approximation, resolve_ifs
from .metric import hausdorff_distance
from .opmeasure import (OperatorFamily, OperatorValuedMeasure, apply_transfer, diagonal_measure,
                        fixed_point_operator_measure, modified_rho, psi_metric, random_povm,
                        rho_brute_oracle, rho_distance, rho_vertex_oracle, support)
from .symbolic import (build_geometric_operators, pullback_pvm, shift_operator, symbolic_sweep,
                       unit_constant)
from .transport import DiscreteMeasure, brute_force_w1, modified_w1, w1_distance


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        parts = ", ".join(f"{k}={_short(v)}" for k, v in self.detail.items())
        return f"[{tag}] {self.number:02d} {self.name}: {parts}"


def _short(v):
    if isinstance(v, float):
        return f"{v:.3g}"
    return str(v)


# one fixed point per depth serves several criteria
OPERATOR_DEPTH = 4


@functools.lru_cache(maxsize=None)
def _cantor_operator_run(K=OPERATOR_DEPTH):
    ifs = resolve_ifs("cantor")
    geo = build_geometric_operators(ifs, K)
    grid = QuantizationGrid(2 * 3.0 ** -K, np.array([-(3.0 ** -K) / 2]))
    # budget 0 keeps iterating past the grid floor until iterates repeat exactly
    run = fixed_point_operator_measure(ifs, geo.F, grid=grid, budget=0.0, tol=1e-9,
                                       max_iter=60, restarts=4)
    return ifs, geo, run


def transport_oracle(seed=0, instances=200):
    rng = np.random.default_rng(seed)
    worst_gap = worst_dual = 0.0
    for _ in range(instances):
        d = int(rng.integers(1, 3))
        m = int(rng.integers(1, 6))
        n = int(rng.integers(1, 7 - m))
        mu = random_measure(rng, d, m, 0.0, 1.0)
        nu = random_measure(rng, d, n, 0.0, 1.0)
        res = w1_distance(mu, nu)
        worst_gap = max(worst_gap, abs(res.value - brute_force_w1(mu, nu)))
        worst_dual = max(worst_dual, abs(res.duality_gap))
    ok = worst_gap <= 1e-9 and worst_dual <= 1e-9
    return ok, {"instances": instances, "max_oracle_gap": worst_gap, "max_duality_gap": worst_dual}


def delta_isometry(seed=0, pairs=100):
    rng = np.random.default_rng(seed)
    worst_h = worst_rho = 0.0
    for _ in range(pairs):
        d = int(rng.integers(1, 4))
        n = int(rng.integers(1, 4))
        x, y = rng.normal(size=d), rng.normal(size=d)
        dist = float(np.linalg.norm(x - y))
        h = w1_distance(DiscreteMeasure.dirac(x), DiscreteMeasure.dirac(y)).value
        r = rho_distance(OperatorValuedMeasure.delta(x, n), OperatorValuedMeasure.delta(y, n),
                         restarts=4, seed=seed).value
        worst_h = max(worst_h, abs(h - dist))
        worst_rho = max(worst_rho, abs(r - dist))
    ok = worst_h <= 1e-12 and worst_rho <= 1e-9
    return ok, {"pairs": pairs, "max_scalar_error": worst_h, "max_operator_error": worst_rho}


def hutchinson_contraction(seed=0, trials=100):
    detail = {}
    ok = True
    for name, cell in (("cantor", 1e-5), ("sierpinski", 1 / 128)):
        ifs = resolve_ifs(name)
        s = ifs.average_contraction
        ratio = contraction_ratio_report(ifs, trials=trials, seed=seed)
        run = hutchinson_fixed_point(ifs, tol=1e-12, max_iter=60, grid=QuantizationGrid(cell))
        r = run.residuals
        # a step is excused once its residual is already under the quantization floor
        decay = max((b / a for a, b in zip(r, r[1:]) if b > run.budget and a > 0), default=0.0)
        ok &= ratio <= s + 1e-9 and decay <= s + 0.02
        detail[f"{name}_pair_ratio"] = ratio
        detail[f"{name}_residual_ratio"] = decay
        detail[f"{name}_s"] = s
    return ok, detail


def cantor_consistency(seed=0):
    ifs = resolve_ifs("cantor")
    diam = ifs.diameter_bound()
    worst = 0.0
    ok = True
    for K in range(3, 8):
        d = w1_distance(hutchinson_iterate(ifs, K), hutchinson_iterate(ifs, K + 1)).value
        bound = 3.0 ** -K * diam
        ok &= d <= bound
        worst = max(worst, d / bound)
    return ok, {"depths": "3..7", "max_value_over_bound": worst}


def operator_identity(seed=0):
    geometric = 0.0
    for name in ("cantor", "sierpinski"):
        ifs = resolve_ifs(name)
        for K in range(1, 7):
            geometric = max(geometric, build_geometric_operators(ifs, K).family_defect())
    symbolic = 0.0
    for N in (2, 3):
        for K in range(1, 6):
            R = OperatorFamily(np.array([shift_operator(N, K, i) for i in range(N)]))
            symbolic = max(symbolic, R.identity_defect())
    ok = geometric <= 1e-10 and symbolic <= 1e-10
    return ok, {"geometric_defect": geometric, "symbolic_defect": symbolic}


def cylinder_formula(seed=0):
    worst = 0.0
    for N in (2, 3):
        for K in range(1, 6):
            worst = max(worst, symbolic_sweep(N, K)["cylinder_identity_defect"])
    return worst <= 1e-12, {"max_defect": worst}


def intertwining(seed=0):
    ifs = resolve_ifs("cantor")
    iso = inter = 0.0
    for K in range(1, 7):
        geo = build_geometric_operators(ifs, K)
        iso = max(iso, geo.isometry_defect())
        inter = max(inter, geo.intertwining_defect())
    ok = iso <= 1e-10 and inter <= 1e-10
    return ok, {"isometry_defect": iso, "intertwining_defect": inter}


def operator_fixed_point(seed=0):
    ifs, geo, run = _cantor_operator_run()
    K = geo.K
    r = run.residuals
    c = ifs.c_max
    decay = max((b / a for a, b in zip(r, r[1:]) if a > 1e-12), default=0.0)
    norm = max(run.normalization_defects)
    one = unit_constant(geo)
    scalar = diagonal_measure(run.measure, one)
    reference = hutchinson_iterate(ifs, 12)
    gap = w1_distance(DiscreteMeasure.from_atoms(scalar.points, scalar.weights), reference).value
    bound = 2 * c ** K * ifs.diameter_bound()
    ok = decay <= c + 0.02 and norm <= 1e-10 and gap <= bound
    return ok, {"iterations": run.iterations, "residual_ratio": decay,
                "max_normalization_defect": norm, "scalar_w1": gap, "scalar_bound": bound}


def rho_contraction(seed=0, pairs=50):
    ifs = resolve_ifs("cantor")
    c = ifs.c_max
    rng = np.random.default_rng(seed)
    worst = -math.inf
    ascent_gap = 0.0
    for _ in range(pairs):
        n = int(rng.integers(1, 4))
        k = int(rng.integers(1, 4))
        locs = rng.uniform(0.0, 1.0, size=(k, 1))
        A = random_povm(rng, locs, n)
        B = random_povm(rng, locs, n)
        F = OperatorFamily.random(rng, ifs.N, n)
        VA, VB = apply_transfer(ifs, F, A), apply_transfer(ifs, F, B)
        before = rho_vertex_oracle(A, B)[0]
        after = rho_vertex_oracle(VA, VB)[0]
        ascent_gap = max(ascent_gap, after - rho_distance(VA, VB, restarts=8, seed=seed).value)
        worst = max(worst, after - c * before)
    ok = worst <= 1e-6 and ascent_gap <= 1e-9
    return ok, {"pairs": pairs, "max_excess_over_c_rho": worst, "max_ascent_shortfall": ascent_gap}


def _projection_example():
    P = np.diag([1.0, 0.0])
    A = OperatorValuedMeasure.from_atoms([[0.0], [2.5]], [P, np.eye(2) - P])
    B = OperatorValuedMeasure.from_atoms([[0.0], [2.5]], [np.eye(2) - P, P])
    return A, B, 2.5


def rho_oracle(seed=0, instances=100):
    rng = np.random.default_rng(seed)
    worst = -math.inf
    for _ in range(instances):
        n = int(rng.integers(1, 5))
        d = int(rng.integers(1, 3))
        A = random_povm(rng, rng.uniform(0, 1, size=(int(rng.integers(1, 4)), d)), n)
        B = random_povm(rng, rng.uniform(0, 1, size=(int(rng.integers(1, 4)), d)), n)
        brute = rho_brute_oracle(A, B, sphere_samples=500, seed=seed)
        worst = max(worst, brute - rho_distance(A, B, seed=seed).value)
    A, B, exact = _projection_example()
    proj_err = abs(rho_distance(A, B, seed=seed).value - exact)
    ok = worst <= 1e-9 and proj_err <= 1e-6
    return ok, {"instances": instances, "max_brute_excess": worst, "projection_error": proj_err}


def _match_atoms(A, B):
    """Pair atoms by nearest location; returns (max location gap, max operator gap)."""
    loc = op = 0.0
    for x, M in zip(A.locations, A.values):
        k = int(np.argmin(np.linalg.norm(B.locations - x, axis=1)))
        loc = max(loc, float(np.linalg.norm(B.locations[k] - x)))
        op = max(op, float(np.linalg.norm(B.values[k] - M, 2)))
    return loc, op


def pvm_fixed_point(seed=0):
    ifs, geo, run = _cantor_operator_run()
    A = run.measure
    proj = all(is_projection(M, 1e-8) for M in A.values)
    P = pullback_pvm(ifs, geo.K, geometry=geo)
    loc, op = _match_atoms(A, P)
    # fixed-point atoms sit at piece centroids, pullback atoms at coded points
    piece = ifs.c_max ** geo.K * ifs.diameter_bound()
    ok = proj and len(A) == len(P) and op <= 1e-8 and loc <= piece
    return ok, {"atoms": len(A), "all_projections": proj, "max_atom_gap": op,
                "max_location_gap": loc, "piece_diameter": piece}


def support_theorem(seed=0):
    ifs, geo, run = _cantor_operator_run()
    K = geo.K
    supp = support(run.measure, 1e-12)
    cloud = attractor_approximation(ifs, depth=K)
    h = hausdorff_distance(supp, cloud)
    bound = 2 * ifs.c_max ** K * ifs.diameter_bound()
    sier = resolve_ifs("sierpinski")
    h2 = hausdorff_distance(support(pullback_pvm(sier, 3), 1e-12), attractor_approximation(sier, depth=3))
    bound2 = 2 * sier.c_max ** 3 * sier.diameter_bound()
    ok = h <= bound and h2 <= bound2
    return ok, {"cantor_hausdorff": h, "cantor_bound": bound,
                "sierpinski_pullback_hausdorff": h2, "sierpinski_bound": bound2}


def modified_metrics(seed=0, instances=60):
    rng = np.random.default_rng(seed)
    excess_h = excess_rho = -math.inf
    for _ in range(instances):
        spread = float(rng.choice([0.5, 2.0, 8.0]))
        mu = random_measure(rng, 1, int(rng.integers(1, 4)), 0.0, spread)
        nu = random_measure(rng, 1, int(rng.integers(1, 4)), 0.0, spread)
        excess_h = max(excess_h, modified_w1(mu, nu) - min(w1_distance(mu, nu).value, 2.0))
        n = int(rng.integers(1, 4))
        A = random_povm(rng, rng.uniform(0, spread, size=(int(rng.integers(1, 4)), 1)), n)
        B = random_povm(rng, rng.uniform(0, spread, size=(int(rng.integers(1, 4)), 1)), n)
        m_exact = rho_vertex_oracle(A, B, bounded=True)[0]
        r_exact = rho_vertex_oracle(A, B)[0]
        excess_rho = max(excess_rho, m_exact - min(r_exact, 2.0),
                         modified_rho(A, B, seed=seed) - min(r_exact, 2.0))
    far = 0.0
    for d in (5.0, 40.0, 1e3):
        x, y = np.zeros(2), np.array([d, 0.0])
        far = max(far, abs(modified_w1(DiscreteMeasure.dirac(x), DiscreteMeasure.dirac(y)) - 2.0))
        far = max(far, abs(modified_rho(OperatorValuedMeasure.delta(x, 2),
                                        OperatorValuedMeasure.delta(y, 2), seed=seed) - 2.0))
    ok = excess_h <= 1e-9 and excess_rho <= 1e-9 and far <= 1e-9
    return ok, {"instances": instances, "max_mh_excess": excess_h, "max_mrho_excess": excess_rho,
                "far_pair_error": far}


def rotated_pair(theta):
    """``diag(0, 2)`` and its rotation by ``theta``; operator-norm distance ``2 sin(theta)``."""
    N = np.diag([0.0, 2.0])
    U = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    return N, U @ N @ U.T


def psi_sanity(seed=0):
    from .hilbert import spectral_pvm

    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
    N = Q @ np.diag([0.0, 1.0 + 1.0j, -0.5 + 2.0j]) @ Q.conj().T
    self_dist = psi_metric(N, N, seed=seed).value
    shifted = [psi_metric(N + np.eye(3) / k, N, seed=seed).value for k in (1, 2, 4, 8, 16, 64)]
    decreasing = all(b < a for a, b in zip(shifted, shifted[1:]))
    far_values, floor = [], math.inf
    for k in range(1, 9):
        theta = np.pi / 4 + np.pi / (4 * k)
        N0, Nk = rotated_pair(theta)
        far_values.append(psi_metric(Nk, N0, seed=seed).value)
        floor = min(floor, rho_vertex_oracle(spectral_pvm(Nk), spectral_pvm(N0))[0])
    ok = (self_dist <= 1e-12 and decreasing and shifted[-1] <= 1 / 64 + 1e-9
          and floor > 0 and min(far_values) >= floor - 1e-9)
    return ok, {"psi_self": self_dist, "psi_shift_last": shifted[-1], "shift_decreasing": decreasing,
                "far_min": min(far_values), "oracle_floor": floor}


CRITERIA = (
    (1, "transport oracle equivalence", transport_oracle),
    (2, "delta isometry", delta_isometry),
    (3, "Hutchinson contraction", hutchinson_contraction),
    (4, "Cantor consistency", cantor_consistency),
    (5, "operator identity", operator_identity),
    (6, "cylinder formula", cylinder_formula),
    (7, "intertwining and isometry", intertwining),
    (8, "operator fixed point", operator_fixed_point),
    (9, "rho contraction", rho_contraction),
    (10, "rho oracle agreement", rho_oracle),
    (11, "PVM fixed point", pvm_fixed_point),
    (12, "support theorem", support_theorem),
    (13, "modified metrics", modified_metrics),
    (14, "Psi metric sanity", psi_sanity),
)


def run_criterion(number, seed=0):
    for num, name, fn in CRITERIA:
        if num == number:
            start = time.perf_counter()
            passed, detail = fn(seed=seed)
            return CriterionResult(num, name, bool(passed), detail, time.perf_counter() - start)
    raise ValueError(f"no acceptance criterion numbered {number}")


def run_all(seed=0, numbers=None, echo=None):
    """Run the selected criteria (all by default); ``echo`` receives each result line."""
    results = []
    for num, _, _ in CRITERIA:
        if numbers is not None and num not in numbers:
            continue
        res = run_criterion(num, seed)
        results.append(res)
        if echo is not None:
            echo(res.line())
    return results
