"""Market family with Gaussian residual risk; everything in closed form.

In market ``n`` the claim splits into a replicable part worth ``d_n`` and an
unhedgeable residual that is centred Gaussian with variance ``gamma2_n``.
The per-unit bid price is then linear in quantity,

    p(q) = d_n - a * q * gamma2_n / 2,

total outlay is an exact downward parabola, and the optimal position against
a quoted price is available without any search.  This family doubles as the
reference implementation that oracle-checks every generic routine.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..core import LimitCurve, MarketSequenceModel, PriceCurve, RateSchedule
from ..errors import DomainError

__all__ = [
    "GaussianResidualParams",
    "GaussianResidualModel",
    "gaussian_price",
    "gaussian_optimal_position",
    "gaussian_limit_curve",
]


@dataclass(frozen=True)
class GaussianResidualParams:
    """Schedules for the replicable value and the residual variance.

    ``gamma2_schedule`` returns the VARIANCE of the residual at index ``n``;
    it must be strictly positive.
    """

    d_schedule: Callable[[int], float]
    gamma2_schedule: Callable[[int], float]

    def at(self, n: int) -> tuple[float, float]:
        d = float(self.d_schedule(n))
        g2 = float(self.gamma2_schedule(n))
        if not g2 > 0.0:
            raise DomainError(f"residual variance at n={n} must be > 0, got {g2}")
        return d, g2


class GaussianResidualModel(MarketSequenceModel):
    def __init__(self, params: GaussianResidualParams):
        self.params = params

    def curve(self, n: int, a: float) -> PriceCurve:
        self._check_index(n)
        d, g2 = self.params.at(n)
        slope = 0.5 * a * g2

        def price(q: np.ndarray) -> np.ndarray:
            return d - slope * q

        return PriceCurve(
            n=n,
            a=a,
            d_n=d,
            lower_bound=None,
            upper_bound=None,
            eval_mode="closed_form",
            _price=price,
        )

    def default_rate_schedule(self) -> RateSchedule:
        # Reciprocal residual variance: the rate at which positions must grow
        # for the scaled price to keep a nontrivial limit.
        return RateSchedule(
            lambda n: 1.0 / self.params.at(n)[1], label="1/gamma2_n"
        )


def gaussian_price(params: GaussianResidualParams, n: int, a: float, q: float) -> float:
    """Per-unit price in market ``n``: ``d_n - a*q*gamma2_n/2``."""
    d, g2 = params.at(n)
    if not a > 0.0:
        raise DomainError(f"risk aversion must be > 0, got {a}")
    return d - 0.5 * a * q * g2


def gaussian_optimal_position(
    params: GaussianResidualParams, n: int, a: float, p_tilde: float
) -> float:
    """Exact optimiser of ``q*p_tilde - q*p(q)``: ``(d_n - p_tilde)/(a*gamma2_n)``."""
    d, g2 = params.at(n)
    if not a > 0.0:
        raise DomainError(f"risk aversion must be > 0, got {a}")
    return (d - p_tilde) / (a * g2)


def gaussian_limit_curve(
    d_inf: float, a: float, variance_rate: float = 1.0
) -> LimitCurve:
    """Limit curve when rates are reciprocal variances: a line of slope
    ``-a * variance_rate / 2`` through ``d_inf``, valid for every scaled
    quantity.

    ``variance_rate`` is the limit of ``r_n * gamma2_n`` (exactly 1 for the
    canonical choice ``r_n = 1/gamma2_n``).
    """
    if not a > 0.0:
        raise DomainError(f"risk aversion must be > 0, got {a}")
    if not variance_rate > 0.0:
        raise DomainError(f"variance_rate must be > 0, got {variance_rate}")
    slope = 0.5 * a * variance_rate

    return LimitCurve(
        d=d_inf,
        delta_minus=None,
        delta_plus=None,
        _eval=lambda ell: d_inf - slope * ell,
    )
