"""Kantorovich-type metrics on scalar and operator-valued measures, iterated
function systems, and their fixed points, with brute-force oracles."""

from .errors import (ConvergenceError, DimensionError, InstanceTooLargeError,
                     MassMismatchError, ValidationError)
from .hilbert import is_projection, operator_norm, spectral_pvm
from .hutchinson import (QuantizationGrid, contraction_ratio_report, hutchinson_fixed_point,
                         hutchinson_iterate, hutchinson_step)
from .ifs import (AffineContraction, IteratedFunctionSystem, attractor_approximation,
                  coding_map, load_ifs, parse_ifs)
from .metric import PointCloud, distance, hausdorff_distance
from .opmeasure import (OperatorFamily, OperatorValuedMeasure, apply_transfer,
                        fixed_point_operator_measure, modified_rho, psi_metric,
                        rho_brute_oracle, rho_distance, rho_vertex_oracle, support,
                        validate_povm, validate_pvm)
from .symbolic import (bernoulli_measure, build_geometric_operators, canonical_pvm,
                       check_cylinder_identity, pullback_pvm, shift_operator)
from .transport import (DiscreteMeasure, brute_force_w1, modified_w1, signed_lip_dual,
                        w1_distance)

__version__ = "0.1.0"

__all__ = [
    "AffineContraction", "apply_transfer", "attractor_approximation", "bernoulli_measure",
    "brute_force_w1", "build_geometric_operators", "canonical_pvm",
    "check_cylinder_identity", "coding_map", "contraction_ratio_report", "ConvergenceError",
    "DimensionError", "DiscreteMeasure", "distance", "fixed_point_operator_measure",
    "hausdorff_distance", "hutchinson_fixed_point", "hutchinson_iterate", "hutchinson_step",
    "InstanceTooLargeError", "is_projection", "IteratedFunctionSystem", "load_ifs",
    "MassMismatchError", "modified_rho", "modified_w1", "operator_norm", "OperatorFamily",
    "OperatorValuedMeasure", "parse_ifs", "PointCloud", "psi_metric", "pullback_pvm",
    "QuantizationGrid", "rho_brute_oracle", "rho_distance", "rho_vertex_oracle",
    "shift_operator", "signed_lip_dual", "spectral_pvm", "support", "validate_povm",
    "validate_pvm", "ValidationError", "w1_distance",
]
