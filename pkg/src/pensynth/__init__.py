"""Penalized synthetic control estimation and inference for multiple treated units."""

from .estimator import (
    CvResult,
    ErrorMatrix,
    att,
    loo_errors,
    prediction_errors,
    select_gamma,
)
from .inference import (
    TestResult,
    andrews_loo_test,
    andrews_statistic,
    andrews_test,
    placebo_test,
    rmspe_statistic,
)
from .panel import PanelData, PanelError, load_panel, save_panel, validate
from .simulation import (
    FactorPath,
    RejectionTable,
    SimConfig,
    generate_factors,
    generate_panel,
    rejection_rates,
)
from .solver import (
    SolverError,
    SolverResult,
    WeightMatrix,
    fit_weights,
    penalized_objective,
    solve_weights,
)

__all__ = [
    "CvResult",
    "ErrorMatrix",
    "FactorPath",
    "PanelData",
    "PanelError",
    "RejectionTable",
    "SimConfig",
    "SolverError",
    "SolverResult",
    "TestResult",
    "WeightMatrix",
    "andrews_loo_test",
    "andrews_statistic",
    "andrews_test",
    "att",
    "fit_weights",
    "generate_factors",
    "generate_panel",
    "load_panel",
    "loo_errors",
    "penalized_objective",
    "placebo_test",
    "prediction_errors",
    "rejection_rates",
    "rmspe_statistic",
    "save_panel",
    "select_gamma",
    "solve_weights",
    "validate",
]

__version__ = "0.1.0"
