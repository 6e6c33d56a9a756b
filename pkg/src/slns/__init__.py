"""Stochastic Lagrangian solver for incompressible flow on periodic grids.

Velocity fields are evolved by averaging noisy characteristics: particle
maps follow ``dX = u dt + sqrt(2 nu) dW`` with spatially uniform noise,
the back-to-labels maps ``A = X^{-1}`` are found by Newton inversion, and
the velocity is recovered with the projected Weber formula
``u = E P[(grad^T A)(u0 o A)]`` (plain transport for Burgers, a Helmholtz
filter pair for the alpha model). Viscosity acts only through the noise
amplitude; no diffusion operator is ever applied.
"""

from .errors import CFLViolation, ConfigError, NonInvertible, SLNSError
from .flowmap import FlowEnsemble, invert_core, spde_residual, spde_residual_flows
from .grid import Field, PeriodicGrid, l2_inner
from .interp import FieldInterpolator, interpolate
from .recovery import (
    ForcingAccumulator,
    accumulate_forcing,
    burgers_velocity,
    burgers_velocity_field,
    circulation,
    lans_alpha_velocity,
    stochastic_velocity,
    transported_vorticity_2d,
    transported_vorticity_3d,
    vorticity_2d_field,
    vorticity_3d_field,
    weber_velocity,
    weber_velocity_field,
)
from .snapshots import export_csv, read_snapshot, write_snapshot
from .solver import (
    Diagnostics,
    RunResult,
    SolverConfig,
    StochasticSolver,
    convergence_study,
    oracle_solution,
    run,
)
from .spectral import (
    SpectralWorkspace,
    curl,
    divergence,
    gradient,
    helmholtz_invert,
    laplacian,
    leray_project,
    workspace,
)
from .wiener import WienerEnsemble

__version__ = "0.1.0"

__all__ = [
    "CFLViolation",
    "ConfigError",
    "Diagnostics",
    "Field",
    "FieldInterpolator",
    "FlowEnsemble",
    "ForcingAccumulator",
    "NonInvertible",
    "PeriodicGrid",
    "RunResult",
    "SLNSError",
    "SolverConfig",
    "SpectralWorkspace",
    "StochasticSolver",
    "WienerEnsemble",
    "accumulate_forcing",
    "burgers_velocity",
    "burgers_velocity_field",
    "circulation",
    "convergence_study",
    "curl",
    "divergence",
    "export_csv",
    "gradient",
    "helmholtz_invert",
    "interpolate",
    "invert_core",
    "l2_inner",
    "lans_alpha_velocity",
    "laplacian",
    "leray_project",
    "oracle_solution",
    "read_snapshot",
    "run",
    "spde_residual",
    "spde_residual_flows",
    "stochastic_velocity",
    "transported_vorticity_2d",
    "transported_vorticity_3d",
    "vorticity_2d_field",
    "vorticity_3d_field",
    "weber_velocity",
    "weber_velocity_field",
    "workspace",
    "write_snapshot",
]
