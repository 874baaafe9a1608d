"""Indifference-price curves, their large-position scaling limits, and the
optimal positions and two-investor equilibria built on top of them."""

from . import errors, models
from .asymptotics import (
    ConvergenceDiagnostic,
    RateVerdict,
    check_strict_concavity,
    corollary_limit,
    estimate_limit_curve,
    probe_delta,
    rate_ratio_sequence,
    scaled_price_sequence,
)
from .config import ScenarioConfig, compile_expression, load_config
from .core import (
    EVAL_MODES,
    LimitCurve,
    MarketSequenceModel,
    PriceCurve,
    RateSchedule,
    RiskAversionSchedule,
    total_price,
    verify_ra_switch,
)
from .equilibrium import (
    EquilibriumResult,
    InvestorSpec,
    endowed_total_price,
    pepq_closed_form,
    pepq_limit_study,
    pepq_solve,
)
from .position import (
    CurveValidationReport,
    OptimalPositionResult,
    brute_force_position,
    optimal_position,
    optimal_sale_quantity,
    validate_price_curve,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "errors",
    "models",
    # curves and schedules
    "EVAL_MODES",
    "RiskAversionSchedule",
    "RateSchedule",
    "PriceCurve",
    "LimitCurve",
    "MarketSequenceModel",
    "total_price",
    "verify_ra_switch",
    # positions
    "OptimalPositionResult",
    "CurveValidationReport",
    "validate_price_curve",
    "optimal_position",
    "optimal_sale_quantity",
    "brute_force_position",
    # scaling limits
    "ConvergenceDiagnostic",
    "RateVerdict",
    "scaled_price_sequence",
    "estimate_limit_curve",
    "probe_delta",
    "rate_ratio_sequence",
    "corollary_limit",
    "check_strict_concavity",
    # equilibria
    "InvestorSpec",
    "EquilibriumResult",
    "endowed_total_price",
    "pepq_solve",
    "pepq_closed_form",
    "pepq_limit_study",
    # scenario files
    "ScenarioConfig",
    "load_config",
    "compile_expression",
]
