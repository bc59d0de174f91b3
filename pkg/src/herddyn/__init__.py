"""Dynamics toolkit for the predator-prey model with square-root functional response.

The square-root (herd) consumption term makes the vector field non-Lipschitz
on the prey axis: prey can go extinct in exact finite time, and the interior
equilibrium, even when locally stable, is never globally stable.  This package
provides the closed-form model facts, a regularized event-detecting
integrator, basin/separatrix mapping, and a CSV/JSON command-line frontend.
"""

__version__ = "0.1.0"

from .model import (
    ModelParams,
    State,
    Equilibrium,
    EquilibriumKind,
    Stability,
    InteriorClassification,
    ExtinctionBoundReport,
    InvalidParameterError,
    validate_params,
    equilibria,
    interior_point,
    interior_equilibrium,
    jacobian,
    classify_interior,
    extinction_threshold,
    extinction_bound,
    envelope,
)
from .integrator import (
    RegularizedState,
    IntegratorConfig,
    Terminal,
    TerminalKind,
    IntegrationStats,
    Trajectory,
    IntegrationError,
    StepSizeUnderflowError,
    NonFiniteStateError,
    rhs_raw,
    rhs_regularized,
    integrate,
    integrate_raw_reference,
)
from .basin import (
    Outcome,
    BasinVerdict,
    Region,
    BasinGrid,
    SeparatrixPoint,
    SeparatrixLine,
    BoundCheck,
    BoundsReport,
    RegimeError,
    classify_ic,
    grid_sweep,
    separatrix_scan,
    verify_theorem_bounds,
)

__all__ = [
    "__version__",
    # model
    "ModelParams",
    "State",
    "Equilibrium",
    "EquilibriumKind",
    "Stability",
    "InteriorClassification",
    "ExtinctionBoundReport",
    "InvalidParameterError",
    "validate_params",
    "equilibria",
    "interior_point",
    "interior_equilibrium",
    "jacobian",
    "classify_interior",
    "extinction_threshold",
    "extinction_bound",
    "envelope",
    # integrator
    "RegularizedState",
    "IntegratorConfig",
    "Terminal",
    "TerminalKind",
    "IntegrationStats",
    "Trajectory",
    "IntegrationError",
    "StepSizeUnderflowError",
    "NonFiniteStateError",
    "rhs_raw",
    "rhs_regularized",
    "integrate",
    "integrate_raw_reference",
    # basin
    "Outcome",
    "BasinVerdict",
    "Region",
    "BasinGrid",
    "SeparatrixPoint",
    "SeparatrixLine",
    "BoundCheck",
    "BoundsReport",
    "RegimeError",
    "classify_ic",
    "grid_sweep",
    "separatrix_scan",
    "verify_theorem_bounds",
]
