"""Quantum propagators from complete Hamilton-Jacobi solutions.

The finite propagator between configuration endpoints is evaluated as an
ordinary integral over the conserved constants generated by a complete
solution of the Hamilton-Jacobi equation, together with the classical
machinery (trajectories, conserved coordinates, two-point actions,
skeletonized actions) needed to cross-check it.
"""

from .errors import (CausticError, ConvergenceError, DomainError,
                     ExtrapolationError, FlatPhaseError, GridMismatchError,
                     HJPropError, SingularJacobianError)
from .systems import (CATALOG_NAMES, CanonicalData, HJSystem, OpenInterval,
                      action_value, canonical_data, catalog_lookup,
                      custom_system, hj_residual)
from .dynamics import (ConservationReport, ShootingResult, Trajectory,
                       conserved_coordinates, integrate_trajectory,
                       invert_momentum, principal_function)
from .skeleton import (SkeletonPath, continuum_limit_error, functional_action,
                       segment_action, skeleton_action,
                       skeleton_from_smooth_path, stationarity_residual,
                       stationary_skeleton)
from .propagator import (DEFAULT_QUAD, FAST_QUAD, CausticReport, KernelSample,
                         QuadratureSpec, caustic_check, kernel_batch,
                         kernel_closed_form, kernel_finite,
                         kernel_infinitesimal, oscillatory_integral,
                         stationary_P)
from .waves import (GaussianTest, UniformGrid, WaveFunction, compose_kernels,
                    delta_identity_check, inner_product, kernel_matrix,
                    load_wavefunction_csv, propagate_wavefunction,
                    save_wavefunction_csv)

__version__ = "0.1.0"
