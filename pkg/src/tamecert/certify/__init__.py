"""Sampled injectivity and invertibility certificates for piecewise maps."""

from .core import (
    FAIL,
    INCONCLUSIVE,
    PASS,
    PASS_HEURISTIC,
    Certificate,
    DirectionalHull,
    EmptySampleError,
    JacobianSampleSet,
    SampleStrategy,
    Tolerances,
    directional_hull,
    jsonable,
    sample_jacobians,
    sphere_grid,
)
from .fp import FPSpec, FPSpecError, build_fp, check_homogeneity, random_fp_spec, verify_inverse
from .hulls import check_Cce, check_Ce, check_thm1, check_thm12, hull_delta, kernel_pair_witness
from .minors import check_thm3, check_thm4, phi_map, sampled_minors
from .probes import check_S, collision_search, injectivity_probe, map_scale
from .winding import WindingError, WindingResult, check_winding, winding_number

__all__ = [
    "FAIL", "INCONCLUSIVE", "PASS", "PASS_HEURISTIC",
    "Certificate", "DirectionalHull", "EmptySampleError", "JacobianSampleSet",
    "SampleStrategy", "Tolerances", "directional_hull", "jsonable", "sample_jacobians",
    "sphere_grid",
    "FPSpec", "FPSpecError", "build_fp", "check_homogeneity", "random_fp_spec", "verify_inverse",
    "check_Cce", "check_Ce", "check_thm1", "check_thm12", "hull_delta", "kernel_pair_witness",
    "check_thm3", "check_thm4", "phi_map", "sampled_minors",
    "check_S", "collision_search", "injectivity_probe", "map_scale",
    "WindingError", "WindingResult", "check_winding", "winding_number",
]
