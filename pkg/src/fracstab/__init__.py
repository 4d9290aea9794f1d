"""Numerical toolkit for Mittag-Leffler functions, Caputo fractional IVPs
and stability/robustness certificates of fractional adaptive error models."""

from ._history import BACKEND as history_backend
from .adaptive import (
    AdaptiveScenario,
    build_error_model_1,
    build_error_model_2,
    destabilizing_benchmark,
    run_scenario,
)
from .certificates import (
    c_of_alpha_A,
    comparison_check,
    pe_estimate,
    pulse_margin,
    pulse_search,
    q_certificate,
    small_gain,
)
from .ml import ml_kernel, ml_kernel_antiderivative, ml_matrix, ml_scalar, ml_series_reference
from .signals import Signal
from .solver import (
    OrderSpec,
    SystemSpec,
    Trajectory,
    asymptotic_verdict,
    lp_fixed_point,
    solve_ivp,
)
from .spectral import linearized_classify, scaled_block_transform, sector_classify

__version__ = "0.1.0"

__all__ = [
    "history_backend",
    "ml_scalar",
    "ml_matrix",
    "ml_kernel",
    "ml_kernel_antiderivative",
    "ml_series_reference",
    "Signal",
    "sector_classify",
    "scaled_block_transform",
    "linearized_classify",
    "c_of_alpha_A",
    "q_certificate",
    "small_gain",
    "comparison_check",
    "pe_estimate",
    "pulse_margin",
    "pulse_search",
    "OrderSpec",
    "SystemSpec",
    "Trajectory",
    "solve_ivp",
    "lp_fixed_point",
    "asymptotic_verdict",
    "AdaptiveScenario",
    "build_error_model_1",
    "build_error_model_2",
    "run_scenario",
    "destabilizing_benchmark",
]
