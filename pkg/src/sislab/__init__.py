"""
sislab: spatial SIS epidemic models on a 1-D habitat.

Four reaction-diffusion SIS models (mass-action or standard incidence, with or
without recruitment and death) under Neumann boundary conditions: basic
reproduction numbers, time integration, endemic equilibria and their
small-diffusion limits.
"""

from .coeffs import (
    CoefficientSet,
    classify_risk,
    from_expressions,
    preset_fig0a,
    preset_homogeneous,
    preset_moderate,
    read_coefficients_csv,
    write_coefficients_csv,
)
from .config import ScenarioConfig, figure_config, parse_config, serialize_config
from .dynamics import (
    State,
    StepperConfig,
    default_initial_state,
    dissipation_check,
    homogeneous_equilibria,
    lyapunov_v,
    lyapunov_w,
    run,
    step,
)
from .errors import (
    ConvergenceError,
    HypothesisError,
    PositivityError,
    ResolutionError,
    SislabError,
    SolverError,
    ValidationError,
)
from .experiments import r0_report, run_scenario
from .grid1d import Grid, NeumannLaplacian, build_grid, integrate
from .kinetics import ModelKind, incidence, reaction, reaction_jacobian
from .spectral import compute_r0, lambda_star, principal_eigenpair, r0_limits, solve_dfe
from .steady import (
    audit_apriori,
    di0_diagnostics,
    mo_limit_wu_zou,
    mw_limit_ds0,
    newton_steady,
    so_limit_peng,
    sweep,
)
from .svgplot import emit_svg

__version__ = "0.1.0"
