"""Numerics for Levy Laplacians on path space and square roots of measures."""
from .errors import (DomainError, NonConvergenceError, ParameterError, PreconditionError,
                     ResolutionError, TruncationError, UnsupportedMethodError)
from .paths import (Path, PartitionSpec, QvEstimate, generate_path, increment_energy,
                    quadratic_variation, qv_limit_dyadic, qv_sup_inf)
from .cons import CoefficientSequence, basis_eval, coefficient_sequence, cons_coefficient
from .summation import abel_sum, cesaro_mean, cesaro_qv, path_abel, tauberian_check
from .kernels import (abel_energy_decomposition, kernel_moment_integrals, p1_delta_action,
                      poisson_eval, theta_x)
from .factors import BlockFactor, ClosedMultiplier, GaussFactor, GridFactor, SpectralGrid
from .systems import MixtureSystem, ProductSystem, hellinger_distance, hellinger_inner, norm
from .calculus import (CylinderFunction, ProductMeasure, check_superprojective,
                       convolution_theorem_check, convolve, cross_moment, decompose,
                       directional_derivative, fourier, frechet_bound_check, multiply_cylinder,
                       product_marginal, projectivize, symbol_multiply, translate, truncated_metric)
from .levy import (PathEnsemble, laplacian_difference_quotient, levy_symbol, riemann_sandwich,
                   spherical_kernel, spherical_mean, symbol_convergence)

__version__ = "0.1.0"
