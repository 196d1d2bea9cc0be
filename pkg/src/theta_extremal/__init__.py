"""Discrete extremal measures on spheres.

Numerically solves and certifies the constrained extremal problem
inf sum_i w_i^theta over discrete probability measures on S^n whose
polynomial moments up to degree m match the uniform measure, evaluates the
associated sharp Sobolev-type constants, and verifies the truncated-bubble
test-family asymptotics that show the degree-2 constant is almost optimal.
"""

from .alignment import align_configurations, matches_configuration
from .bubbles import (
    BubbleProfile,
    QuadratureRule,
    corrected_test_function,
    integrate_bubble,
    leading_coefficients,
    limit_identity_check,
    phi_eps,
    rayleigh_sweep,
)
from .measures import (
    CircleCertificate,
    DiscreteMeasure,
    FrameCertificate,
    circle_certificate,
    gram_certificate_m2,
    is_feasible,
    merge_close_points,
    rotate_measure,
    theta_energy,
    uniform_measure,
)
from .moments import MomentBasis, build_basis, moment_residual, monomial_sphere_average
from .sobolev import (
    HigherOrderConstant,
    SobolevParams,
    higher_order_constant,
    improved_constant,
    sharp_biharmonic,
    sharp_sobolev,
)
from .solver import (
    OptimizerReport,
    SolverConfig,
    bruteforce_theta_m1,
    closed_form_theta,
    minimal_support,
    minimize_theta,
    weight_feasibility_m1,
)
from .sphere import (
    beta,
    gamma,
    geodesic_distance,
    make_configuration,
    simplex_vertices,
    surface_area,
)

__version__ = "0.1.0"

__all__ = [
    "BubbleProfile",
    "CircleCertificate",
    "DiscreteMeasure",
    "FrameCertificate",
    "HigherOrderConstant",
    "MomentBasis",
    "OptimizerReport",
    "QuadratureRule",
    "SobolevParams",
    "SolverConfig",
    "align_configurations",
    "beta",
    "bruteforce_theta_m1",
    "build_basis",
    "circle_certificate",
    "closed_form_theta",
    "corrected_test_function",
    "gamma",
    "geodesic_distance",
    "gram_certificate_m2",
    "higher_order_constant",
    "improved_constant",
    "integrate_bubble",
    "is_feasible",
    "leading_coefficients",
    "limit_identity_check",
    "make_configuration",
    "matches_configuration",
    "merge_close_points",
    "minimal_support",
    "minimize_theta",
    "moment_residual",
    "monomial_sphere_average",
    "phi_eps",
    "rayleigh_sweep",
    "rotate_measure",
    "sharp_biharmonic",
    "sharp_sobolev",
    "simplex_vertices",
    "surface_area",
    "theta_energy",
    "uniform_measure",
    "weight_feasibility_m1",
    "__version__",
]
