"""Limit curves obtained from a large-deviations rate function.

When the unhedgeable part of the claim satisfies a large-deviations
principle with rate function ``I`` under the pricing measures, the scaled
prices converge to

    p(ell) = d - sup_y( -ell * a * y - I(y) ) / (a * ell),

for scaled quantities inside the effective domain.  Continuity at 0 needs
the zero set of ``I`` to be exactly {0}; a wider zero set means the residual
does not concentrate and the marginal anchor ``d`` is unjustified.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from ..core import LimitCurve
from ..errors import DomainError, EffectiveDomainError, ModelAssumptionError, UnboundedObjectiveError
from ..numerics import minimize_unimodal

__all__ = ["RateFunction", "ldp_limit_price", "ldp_limit_curve"]

_GRID_POINTS = 200_001
_GRID_SPAN = 1e4


@dataclass(frozen=True)
class RateFunction:
    """Nonnegative rate function with its declared zero set.

    ``convex=True`` lets the inner optimisation use unimodal search; set it
    to False for merely lower-semicontinuous rates, which fall back to a
    dense grid scan.
    """

    eval: Callable[[float], float]
    zero_set: Tuple[float, ...] = (0.0,)
    convex: bool = True

    def __call__(self, y: float) -> float:
        value = float(self.eval(y))
        if value < 0.0:
            raise DomainError(f"rate function must be >= 0, got I({y}) = {value}")
        return value


def _inner_sup(rate: RateFunction, slope: float, tol: float) -> float:
    """sup_y(slope * y - I(y)); raises when the objective is unbounded."""
    if rate.convex:
        objective = lambda y: rate(y) - slope * y
        y_star, neg = minimize_unimodal(objective, (-1.0, 1.0), tol=tol)
        return -neg
    ys = np.linspace(-_GRID_SPAN, _GRID_SPAN, _GRID_POINTS)
    vals = slope * ys - np.array([rate(float(y)) for y in ys])
    i = int(np.argmax(vals))
    if i in (0, _GRID_POINTS - 1):
        raise UnboundedObjectiveError(
            "unbounded objective: rate-function sup attained at the scan edge"
        )
    # one refinement pass around the coarse winner
    ys2 = np.linspace(ys[i - 1], ys[i + 1], 10_001)
    vals2 = slope * ys2 - np.array([rate(float(y)) for y in ys2])
    return float(np.max(vals2))


def ldp_limit_price(
    d: float, a: float, rate: RateFunction, ell: float, tol: float = 1e-10
) -> float:
    """Limiting per-unit price at scaled quantity ``ell`` (``ell != 0``)."""
    if not a > 0.0:
        raise DomainError(f"risk aversion must be > 0, got {a}")
    if ell == 0.0:
        return d
    try:
        sup = _inner_sup(rate, -ell * a, tol)
    except UnboundedObjectiveError as err:
        raise EffectiveDomainError(
            f"ell outside effective domain: inner sup diverges at ell = {ell}"
        ) from err
    return d - sup / (a * ell)


def ldp_limit_curve(d: float, a: float, rate: RateFunction) -> LimitCurve:
    """Package the rate-function limit as a curve anchored at ``d``.

    The effective domain is left unbounded here; evaluation raises the
    domain error lazily wherever the inner sup actually diverges.
    """
    if rate.zero_set != (0.0,):
        raise ModelAssumptionError(
            "model assumption violated: rate function must vanish only at 0, "
            f"declared zero set {rate.zero_set}"
        )
    return LimitCurve(
        d=d,
        delta_minus=None,
        delta_plus=None,
        _eval=lambda ell: ldp_limit_price(d, a, rate, ell),
    )
