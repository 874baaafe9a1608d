"""Concrete market families: Gaussian residual, basis risk, default bond,
proportional transaction costs, plus the rate-function route to limit curves
and the Black-Scholes reference price."""

from .blackscholes import black_scholes_price
from .gaussian import (
    GaussianResidualModel,
    GaussianResidualParams,
    gaussian_limit_curve,
    gaussian_optimal_position,
    gaussian_price,
)
from .ldp import RateFunction, ldp_limit_curve, ldp_limit_price
from .basis_risk import (
    BasisRiskModel,
    BasisRiskParams,
    MonteCarloConfig,
    basis_risk_limit,
    basis_risk_limit_curve,
    basis_risk_price_mc,
    basis_risk_price_quadrature,
)
from .default_bond import (
    DefaultBondModel,
    DefaultBondParams,
    default_bond_F,
    default_bond_limit_curve,
    default_bond_price,
)
from .transaction import (
    PdeConfig,
    TransCostParams,
    TransactionCostModel,
    transaction_limit_curve,
    transaction_psi,
)

__all__ = [
    "black_scholes_price",
    "GaussianResidualModel",
    "GaussianResidualParams",
    "gaussian_limit_curve",
    "gaussian_optimal_position",
    "gaussian_price",
    "RateFunction",
    "ldp_limit_curve",
    "ldp_limit_price",
    "BasisRiskModel",
    "BasisRiskParams",
    "MonteCarloConfig",
    "basis_risk_limit",
    "basis_risk_limit_curve",
    "basis_risk_price_mc",
    "basis_risk_price_quadrature",
    "DefaultBondModel",
    "DefaultBondParams",
    "default_bond_F",
    "default_bond_limit_curve",
    "default_bond_price",
    "PdeConfig",
    "TransCostParams",
    "TransactionCostModel",
    "transaction_limit_curve",
    "transaction_psi",
]
