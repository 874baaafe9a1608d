"""Semantic exceptions shared across the package.

Every failure mode that callers are expected to handle gets its own class;
generic ``ValueError``/``RuntimeError`` are reserved for programming errors.
"""

from __future__ import annotations


class IndiffError(Exception):
    """Base class for all package-specific errors."""


class DomainError(IndiffError, ValueError):
    """An input lies outside the mathematical domain of an operation."""


class UnboundedObjectiveError(IndiffError):
    """Bracket expansion hit its cap without enclosing a minimum."""


class OdeBlowUpError(IndiffError):
    """A state variable became non-finite during time integration."""


class STableError(IndiffError):
    """Construction of the curvature-response table failed."""


class ModelAssumptionError(IndiffError):
    """A model was configured outside its stated assumptions."""


class QuadratureUnavailableError(IndiffError):
    """The deterministic quadrature route does not apply to this model."""


class PositivityLostError(IndiffError):
    """A quantity that must stay positive crossed zero numerically."""


class PdeStepError(IndiffError):
    """A PDE time step failed after the refinement cap was reached."""


class ArbitrageError(IndiffError):
    """A quoted price sits outside the arbitrage-free interval."""


class NoInteriorOptimumError(IndiffError):
    """No interior optimiser exists on the searched half-line."""


class SellRangeError(IndiffError):
    """A quoted price is outside the range at which a sale optimum exists."""


class ConfigError(IndiffError, ValueError):
    """A scenario configuration failed schema validation."""


class EffectiveDomainError(DomainError):
    """A scaled quantity lies outside the effective domain of a limit curve."""


class NonUniqueLimitError(IndiffError):
    """The limiting optimiser is not unique; corollary-style limits fail."""


class EquilibriumWarning(UserWarning):
    """Equilibrium caveat: flat clearing surplus or degenerate endowments."""
