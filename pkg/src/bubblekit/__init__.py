"""Numerics for bubbling solutions of the Nirenberg problem on half-spheres."""
from .bubbles import (
    BubbleParam,
    InteractionMatrix,
    barycentric_pairing,
    bubble_value,
    d_eps_d_a,
    d_eps_d_lambda,
    green_regular_part,
    interaction_eps,
    interaction_matrix,
    projected_bubble_envelope,
    subcritical_expansion_check,
)
from .config import ConfigError
from .constants import ConstantsTable, compute_constants, kappa_table
from .curvature import (
    CriticalPointRecord,
    CurvatureField,
    eval_K,
    find_critical_points,
    grad_K,
    hess_K,
    laplace_beltrami_K,
    normal_derivative,
    symmetry_defect_derK,
)
from .geometry import (
    SpherePoint,
    TangentVector,
    cluster_barycenter,
    exp_map,
    geodesic_distance,
    tangent_project,
)
from .predictor import (
    BlowupScenario,
    Prediction,
    ResidualReport,
    balancing_residual,
    mu_partition,
    predict,
    predict_alpha,
    predict_boundary_lambda,
    predict_cluster_positions,
    predict_interior_lambda,
    sweep,
)
from .vortex import VortexConfiguration, energy, gradient, hessian, virial_parts, virial_residual

__all__ = [name for name in dir() if not name.startswith("_")]
