"""Spectral Galerkin solver for surface quasi-geostrophic flow on a
rectangle with Dirichlet boundary conditions, plus a verification
harness that numerically certifies the scheme's structural identities
and inequalities at desk scale."""

__version__ = "0.1.0"

from .basis import (DomainSpec, EigenBasis, GridField, Quadrature1D, SpectralField,
                    analyze, build_basis, evaluate_modes, grid_lp_norm, integrate,
                    quadrature_grid, synthesize, synthesize_derivative, unit_field)
from .checks import (CommutatorRecord, InequalityReport, check_velocity,
                     commutator_diagnostic, cordoba_gap, cordoba_report,
                     cordoba_scale, energy_balance, lp_monotonicity)
from .config import (ExperimentPreset, SolverConfig, parse_config, resolve_config)
from .dynamics import (GammaTensor, VelocityField, gamma_tensor, nonlinear_term,
                       nonlinear_via_gamma, rhs, velocity)
from .errors import (BlowUpError, ConfigurationError, DomainError,
                     PreconditionError, ShapeMismatchError)
from .spectral import (dot, frac_laplacian, interpolation_slack, sobolev_norm,
                       truncate)
from .stepping import (DiagnosticsRow, PicardResult, Trajectory,
                       local_existence_time, run, run_picard_inviscid,
                       run_retarded_mollification, smallness_margin,
                       solve_linear_advection, step)

__all__ = [name for name in dir() if not name.startswith("_")]
