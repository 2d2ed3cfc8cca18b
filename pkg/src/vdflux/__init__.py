"""Scale-by-scale energy budget diagnostics for variable-density flow on the torus."""

__version__ = "0.1.0"

from .besov import (BesovParams, C0Norm, EstimateReport, ShellCoefficients,
                    besov_norm, kernel_sum, kernel_weight, localized_sum,
                    shell_coefficients, verify_kernel_estimates)
from .budget import (FluxParts, FluxSpectrum, budget_residual, coarse_energy,
                     decomposition_check, decomposition_terms, energy_balance_check,
                     favre_velocity, flux, flux_spectrum, flux_tensor, remainder,
                     remainder3, remainder_quadrature, viscous_term, viscous_total)
from .cutoffs import SHARP, SMOOTH, CutoffProfile, lambda_q, make_cutoff
from .errors import (CFLViolation, ConfigError, GibbsOvershootWarning, GridMismatchError,
                     InvalidStateError, MissingPressureWarning, NonPositiveCoarseDensity,
                     NumericalError, PressureIterationError, SnapshotFormatError,
                     ValidationError)
from .generators import (GeneratorSpec, density_profile, random_besov,
                         single_mode_scalar, single_mode_velocity, taylor_green)
from .grid import Field, TorusGrid, constant_field
from .khm import (LagGrid, StructureFunctionFlux, axis_lags, increment_stats,
                  khm_flux, khm_flux_div, khm_flux_sym)
from .snapshots import read_series, read_snapshot, write_series, write_snapshot
from .solver import DensityFlowSolver, ForcingSpec, RunResult, SolverConfig, run, weak_residuals
from .spectral import (ShellDecomposition, decompose, divergence, divergence_defect,
                       gradient, laplacian, leray_project, lp_norm, project_high,
                       project_low, project_near, project_shell, resample)
from .state import SolutionState, total_energy, total_mass, total_momentum
