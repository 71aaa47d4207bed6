"""Convex-body functionals, cosine-product band-limited functions, nodal-set
surface density, and randomized sharpness experiments for mobile-sampling
thresholds."""

__version__ = "0.1.0"

from .errors import BodyDefinitionError, CertificateFailure, InfiniteZeroCountError
from .geometry import (ConvexBody, Perimeter2D, SphereQuadrature, mean_width,
                       mean_width_std_error, perimeter_2d, polar_boundary_nodes,
                       sample_boundary, sharp_constant, sphere_quadrature,
                       sphere_surface_measure, unit_ball_volume, unit_vector)
from .cosine_products import (CosineProduct, SpectrumCertificate, jensen_functional,
                              ronkin_estimate, slice_zero_count, spectrum_certificate)
from .arrangements import (DensityReport, HyperplaneFamily, PrunedArrangement,
                           analytic_density, arrangement_from_dict,
                           arrangement_to_dict, ball_measure, crofton_estimate,
                           exact_ball_measure, hybrid_ball_measure,
                           line_intersection_count, lower_density_estimate,
                           nodal_arrangement, phi_regularity_profile, prune,
                           pruned_ball_measure_2d)
from .construction import (QuarterTurnMu, SharpnessRun, WeightFunction,
                           construct_example, default_exclusion_radius,
                           density_bound_margin, mu_2d_quarter_turn, mu_functional,
                           verify_2d_sharpness, verify_ball_sharpness)
from .sampling import (RatioReport, TestFunction, density_sweep,
                       isotropic_family_pool, make_test_function,
                       modulated_test_function, sampling_ratio)

__all__ = [name for name in dir() if not name.startswith("_")]
