"""Ball-indexed Gaussian random fields: kernels, sampling and axiom checks."""
__version__ = "0.1.0"

from .errors import BallFieldError, DomainError, NumericalError, PreconditionError, UnsupportedError
from .geometry import (Ball, Box, EuclideanMotion, Everything, HalfSpace, OpenBall, TimeZeroSlab,
                       apply_motion, ball_volume, intersection_volume, lens_volume, random_balls,
                       read_balls_csv, region_contains_ball, region_contains_center, region_subset,
                       theta, transform_region, write_balls_csv)
from .covariance import CovarianceMatrix
from .kernels import (DEFAULT_QUADRATURE, FreeField, QuadratureConfig, Spectral, W, White, cross_kernel,
                      eval_kernel, free_green, kernel_from_dict, kernel_matrix, pseudo_metric,
                      pushforward_kernel, shifted_free_field, yukawa_green_3d)
from .gaussian import (SampleBatch, characteristic_check, empirical_covariance, factorize,
                       marginal_consistency, sample, sample_covariance)
from .axioms import (Functional, RPReport, index_monotonicity_check, invariance_check,
                     reflected_configuration, rp_gaussian_check, rp_kernel_check, rp_monte_carlo_check)
from .transform import Transform, apply_transform, empirical_char_functional, sample_transformed
from .continuity import (EntropyReport, ball_grid, covering_number, entropy_integral, entropy_refinement,
                         path_modulus, pseudo_metric_table)
