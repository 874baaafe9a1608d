"""Defaultable bond priced through the HJB reduction of the jump model.

The stock carries constant drift ``mu`` and volatility ``sigma`` and can
jump to zero at the first arrival ``tau_n`` of an independent Poisson clock
with intensity ``lam_n``; the claim pays one unit when ``tau_n <= T``.  The
value-function factor ``F(t; q)`` solves, backward from ``F(T; q) = exp(-a q)``,

    F'(t) = (lam_n + mu^2/(2 sigma^2)) F - min_phi [ sigma^2 phi^2 F / 2
                                                     + lam_n exp(mu/sigma^2 - phi) ],

and the unit price of ``q`` bonds is ``-(1/(a q)) log(F(0;q)/F(0;0))``, a
number strictly between the no-arbitrage bounds 0 and 1.

The inner minimiser ``phi_hat`` is pinned by a transcendental fixed point.
Two variants of that fixed point are exposed: the published one,

    phi_hat * exp(phi_hat) = lam_n * exp(mu/sigma^2) / F,

and a rederivation from the first-order condition of the displayed minimum,
which carries an extra ``1/sigma^2``.  They coincide only when ``sigma = 1``;
``fixed_point_variant`` selects one, defaulting to the published form.  The
minimised bracket is always evaluated directly at ``phi_hat`` rather than
through either identity, so the choice affects only where the bracket is
evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..core import LimitCurve, MarketSequenceModel, PriceCurve, RateSchedule
from ..errors import DomainError, IndiffError, PositivityLostError
from ..numerics import rk4_integrate, solve_x_exp_x

__all__ = [
    "DefaultBondParams",
    "DefaultBondModel",
    "default_bond_F",
    "default_bond_price",
    "default_bond_limit_curve",
]

_VARIANTS = ("as_printed", "foc")

# step size for the symmetric difference that recovers the marginal price
# from log F; the ratio formula is 0/0 at q = 0
_MARGINAL_H = 1e-4


@dataclass(frozen=True)
class DefaultBondParams:
    """Stock coefficients, default-intensity schedule, and horizon."""

    mu: float
    sigma: float
    lambda_schedule: Callable[[int], float]
    horizon: float = 1.0
    fixed_point_variant: str = "as_printed"

    def __post_init__(self) -> None:
        if not self.sigma > 0.0:
            raise DomainError(f"sigma must be > 0, got {self.sigma}")
        if not self.horizon > 0.0:
            raise DomainError(f"horizon must be > 0, got {self.horizon}")
        if self.fixed_point_variant not in _VARIANTS:
            raise DomainError(
                f"fixed_point_variant must be one of {_VARIANTS}, "
                f"got {self.fixed_point_variant!r}"
            )

    def intensity(self, n: int) -> float:
        lam = float(self.lambda_schedule(n))
        if not lam > 0.0:
            raise DomainError(f"default intensity must be > 0, got lambda({n}) = {lam}")
        return lam


def default_bond_F(
    params: DefaultBondParams, n: int, a: float, q: float, steps: int = 400
) -> float:
    """Solve the backward ODE and return ``F(0; q)``.

    RK4 from ``T`` down to 0; every stage solves the fixed point for
    ``phi_hat`` and evaluates the minimised bracket there.  ``F`` must stay
    positive along the way (the fixed point divides by it); losing
    positivity signals too coarse a step grid.
    """
    if steps < 100:
        raise DomainError(f"steps must be >= 100, got {steps}")
    if not a > 0.0:
        raise DomainError(f"risk aversion must be > 0, got {a}")
    lam = params.intensity(n)
    mu, sig = params.mu, params.sigma
    growth = lam + mu * mu / (2.0 * sig * sig)
    jump_scale = lam * math.exp(mu / (sig * sig))
    foc = params.fixed_point_variant == "foc"

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        f = y[0]
        if not f > 0.0:
            raise PositivityLostError(
                f"positivity lost: F({t:.6g}; q={q}) = {f:.3e}; increase steps"
            )
        c = jump_scale / f
        if foc:
            c /= sig * sig
        phi = solve_x_exp_x(c)
        bracket = 0.5 * sig * sig * phi * phi * f + jump_scale * math.exp(-phi)
        return np.array([growth * f - bracket])

    y_final = rk4_integrate(rhs, params.horizon, 0.0, np.array([math.exp(-a * q)]), steps)
    f0 = float(y_final[0])
    if not f0 > 0.0:
        raise PositivityLostError(
            f"positivity lost: F(0; q={q}) = {f0:.3e}; increase steps"
        )
    return f0


def default_bond_price(
    params: DefaultBondParams, n: int, a: float, q: float, steps: int = 400
) -> float:
    """Unit indifference price of ``q`` default bonds; strictly in (0, 1).

    ``q = 0`` returns the marginal price, computed as a symmetric difference
    of ``log F`` in the position variable.
    """
    if q == 0.0:
        h = _MARGINAL_H
        up = default_bond_F(params, n, a, h, steps)
        down = default_bond_F(params, n, a, -h, steps)
        price = -(math.log(up) - math.log(down)) / (2.0 * a * h)
    else:
        f_q = default_bond_F(params, n, a, q, steps)
        f_0 = default_bond_F(params, n, a, 0.0, steps)
        price = -math.log(f_q / f_0) / (a * q)
    if not 0.0 < price < 1.0:
        raise IndiffError(
            f"default bond price {price} escaped (0, 1); numerical failure"
        )
    return price


class DefaultBondModel(MarketSequenceModel):
    """Curve factory over the intensity schedule; one ODE solve per point."""

    def __init__(self, params: DefaultBondParams, steps: int = 400):
        if steps < 100:
            raise DomainError(f"steps must be >= 100, got {steps}")
        self.params = params
        self.steps = steps

    def curve(self, n: int, a: float) -> PriceCurve:
        self._check_index(n)
        params, steps = self.params, self.steps
        f_0 = default_bond_F(params, n, a, 0.0, steps)
        d_n = default_bond_price(params, n, a, 0.0, steps)

        def price(q: np.ndarray) -> np.ndarray:
            out = np.empty_like(q)
            for i, x in enumerate(q):
                f_q = default_bond_F(params, n, a, float(x), steps)
                out[i] = -math.log(f_q / f_0) / (a * float(x))
            return out

        return PriceCurve(
            n=n,
            a=a,
            d_n=d_n,
            lower_bound=0.0,
            upper_bound=1.0,
            eval_mode="ode",
            _price=price,
        )

    def default_rate_schedule(self) -> RateSchedule:
        # intensities below 1 make -log(lambda_n) a positive divergent rate
        return RateSchedule(
            lambda n: -math.log(self.params.intensity(n)), label="-log(lambda_n)"
        )


def default_bond_limit_curve(a: float) -> LimitCurve:
    """Limiting scaled price as the default intensity vanishes.

    Under the rate ``-log(lambda_n)`` the scaled price tends to the upper
    arbitrage bound 1 for every ``ell`` in ``(0, 1/a)``; the scaled total is
    then linear, the canonical example failing strict concavity.
    """
    if not a > 0.0:
        raise DomainError(f"risk aversion must be > 0, got {a}")
    return LimitCurve(
        d=1.0,
        delta_minus=0.0,
        delta_plus=1.0 / a,
        _eval=lambda ell: 1.0,
    )
