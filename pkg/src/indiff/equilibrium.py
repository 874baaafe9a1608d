"""Two-investor partial equilibrium on a shared price curve.

Both investors value the claim through the same base curve (quoted at unit
risk aversion; individual aversions enter through the exchange identity
``p_a(q) = p_1(a q)``) but may hold endowments that are multiples of the
claim.  An endowment shifts the total valuation: the worth of buying ``q``
on top of ``b`` units is ``total(q + b) - total(b)``.

The equilibrium trade maximises the joint surplus

    H(q) = [total_1(q + b_1) - total_1(b_1)] + [total_2(b_2 - q) - total_2(b_2)],

which is concave whenever both totals are.  The clearing price is investor
1's marginal endowed valuation at the optimal trade, computed as a centered
difference; at an interior optimum both investors' marginals agree, and
each investor's best response to that price returns the same trade with
opposite signs.  All of that is checked, not assumed: the result carries
the clearing residual ``|q1(p*) + q2(p*)|``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, List, Sequence, Tuple

import numpy as np

from .core import MarketSequenceModel, PriceCurve, RateSchedule, total_price
from .errors import (
    ArbitrageError,
    DomainError,
    EquilibriumWarning,
    UnboundedObjectiveError,
)
from .numerics import minimize_unimodal
from .asymptotics import ConvergenceDiagnostic

__all__ = [
    "InvestorSpec",
    "EquilibriumResult",
    "endowed_total_price",
    "pepq_solve",
    "pepq_closed_form",
    "pepq_limit_study",
]

#: Relative step for the centered-difference marginal price.
_MARGINAL_H = 1e-5


@dataclass(frozen=True)
class InvestorSpec:
    """Risk aversion plus an endowment held as a multiple of the claim.

    ``claim_multiple = 0`` means no endowment.  General random endowments
    are out of scope; the claim-multiple family is the one with a usable
    closed form and it already exhibits both limiting regimes.
    """

    a: float
    claim_multiple: float = 0.0

    def __post_init__(self) -> None:
        if not self.a > 0.0:
            raise DomainError(f"risk aversion must be > 0, got {self.a}")


@dataclass(frozen=True)
class EquilibriumResult:
    """Clearing price and trade, with the residual that certifies them.

    ``q_star`` is the quantity investor 1 buys from investor 2.  The
    residual is ``|q1(p*) + q2(p*)|`` over the two best responses to the
    reported price; it is re-measured, never assumed zero.
    """

    p_star: float
    q_star: float
    residual: float
    tol: float


def endowed_total_price(curve: PriceCurve, q: float, b: float) -> float:
    """Total value of acquiring ``q`` units on top of ``b`` already held."""
    return float(total_price(curve, q + b)) - float(total_price(curve, b))


def _scaled_total(curve_base: PriceCurve, a: float) -> Callable[[float], float]:
    # aversion enters only through a*q: total_a(q) = total_1(a q) / a
    def tot(q: float) -> float:
        return float(total_price(curve_base, a * q)) / a

    return tot


def _endowed(curve_base: PriceCurve, inv: InvestorSpec) -> Callable[[float], float]:
    tot = _scaled_total(curve_base, inv.a)
    base = tot(inv.claim_multiple)

    def value(q: float) -> float:
        return tot(q + inv.claim_multiple) - base

    return value


def _polish_max(f: Callable[[float], float], x0: float, tol: float) -> float:
    # Golden section locates a maximiser only to sqrt(machine eps), since
    # the objective is flat to rounding within that distance.  The root of
    # the centered-difference slope has no such limit; a few secant steps
    # recover it (exactly so for quadratic totals, where the difference
    # quotient is the true derivative).
    h = _MARGINAL_H * max(1.0, abs(x0))

    def slope(x: float) -> float:
        return (f(x + h) - f(x - h)) / (2.0 * h)

    x_prev, g_prev = x0 - h, slope(x0 - h)
    x, g = x0, slope(x0)
    for _ in range(12):
        if g == g_prev:
            break
        step = g * (x - x_prev) / (g - g_prev)
        x_prev, g_prev = x, g
        x = x - step
        if abs(step) <= max(tol, 1e-14) * max(1.0, abs(x)):
            break
        g = slope(x)
    return x


def _best_response(value: Callable[[float], float], p: float, tol: float) -> float:
    obj = lambda q: q * p - value(q)
    q, _ = minimize_unimodal(obj, (-1.0, 1.0), tol=tol)
    return _polish_max(lambda q: -obj(q), q, tol)


def _clearing_residual(
    e1: Callable[[float], float],
    e2: Callable[[float], float],
    p_star: float,
    tol: float,
) -> float:
    try:
        r1 = _best_response(e1, p_star, tol)
        r2 = _best_response(e2, p_star, tol)
    except UnboundedObjectiveError:
        # every response ties on a flat book; no clearing certificate exists
        return math.inf
    return float(abs(r1 + r2))


def _check_price_bounds(curve_base: PriceCurve, p_star: float) -> None:
    lo, hi = curve_base.lower_bound, curve_base.upper_bound
    if (lo is not None and p_star <= lo) or (hi is not None and p_star >= hi):
        raise ArbitrageError(
            f"equilibrium price {p_star} escaped the arbitrage interval "
            f"({lo if lo is not None else '-inf'}, {hi if hi is not None else 'inf'})"
        )


def _flag_degenerate_endowments(inv1: InvestorSpec, inv2: InvestorSpec) -> None:
    x1 = inv1.a * inv1.claim_multiple
    x2 = inv2.a * inv2.claim_multiple
    if abs(x1 - x2) <= 1e-12 * max(1.0, abs(x1), abs(x2)):
        warnings.warn(
            "aversion-weighted endowments coincide (a1*b1 == a2*b2): the "
            "equilibrium trade is zero and the model's endowment assumption "
            "is degenerate",
            EquilibriumWarning,
            stacklevel=3,
        )


def pepq_solve(
    curve_base: PriceCurve,
    inv1: InvestorSpec,
    inv2: InvestorSpec,
    tol: float = 1e-10,
) -> EquilibriumResult:
    """Clearing price and trade by direct maximisation of the joint surplus.

    ``curve_base`` must be quoted at unit risk aversion; investor aversions
    are applied through the exchange identity.  A surplus that is flat
    around its maximiser triggers an :class:`EquilibriumWarning` and an
    arbitrary maximiser is returned.
    """
    if not tol > 0.0:
        raise DomainError(f"tol must be positive, got {tol}")
    _flag_degenerate_endowments(inv1, inv2)
    e1 = _endowed(curve_base, inv1)
    e2 = _endowed(curve_base, inv2)

    def surplus(q: float) -> float:
        return e1(q) + e2(-q)

    flat = False
    try:
        q_star, _ = minimize_unimodal(lambda q: -surplus(q), (-1.0, 1.0), tol=tol)
        q_star = _polish_max(surplus, q_star, tol)
    except UnboundedObjectiveError:
        # rounding noise on a flat surplus defeats bracket expansion; make
        # sure flat is what it is before claiming so
        span = 4.0 * max(1.0, abs(inv1.claim_multiple), abs(inv2.claim_multiple))
        vals = [surplus(float(p)) for p in np.linspace(-span, span, 9)]
        if max(vals) - min(vals) > 1e-9 * max(1.0, max(map(abs, vals))):
            raise
        flat = True
        q_star = 0.0

    if not flat:
        # flat-objective detection: a strictly concave surplus must visibly
        # drop a step away from the maximiser
        step = 1e-3 * max(1.0, abs(q_star))
        peak = surplus(q_star)
        drop = max(peak - surplus(q_star + step), peak - surplus(q_star - step))
        flat = drop <= 1e-12 * max(1.0, abs(peak))
    if flat:
        warnings.warn(
            "non-unique equilibrium: the clearing surplus is flat around the "
            "reported trade",
            EquilibriumWarning,
            stacklevel=2,
        )

    h = _MARGINAL_H * max(1.0, abs(q_star))
    p_star = (e1(q_star + h) - e1(q_star - h)) / (2.0 * h)
    _check_price_bounds(curve_base, p_star)

    return EquilibriumResult(
        p_star=float(p_star),
        q_star=float(q_star),
        residual=_clearing_residual(e1, e2, p_star, tol),
        tol=tol,
    )


def pepq_closed_form(
    curve_base: PriceCurve, a1: float, a2: float, b1: float, b2: float
) -> EquilibriumResult:
    """Equilibrium from the claim-multiple formulas, residual re-measured.

    The trade is exactly ``(a2*b2 - a1*b1) / (a1 + a2)``.  The price is the
    marginal total value of the aggregated investor (harmonic aversion,
    summed endowments) at the aggregate endowment, by centered difference;
    on a curve with linear per-unit prices that marginal is exact up to
    rounding.
    """
    inv1 = InvestorSpec(a=a1, claim_multiple=b1)
    inv2 = InvestorSpec(a=a2, claim_multiple=b2)
    _flag_degenerate_endowments(inv1, inv2)
    q_star = (a2 * b2 - a1 * b1) / (a1 + a2)

    a_agg = a1 * a2 / (a1 + a2)
    b_agg = b1 + b2
    tot = _scaled_total(curve_base, a_agg)
    h = _MARGINAL_H * max(1.0, abs(b_agg))
    p_star = (tot(b_agg + h) - tot(b_agg - h)) / (2.0 * h)
    _check_price_bounds(curve_base, p_star)

    tol = 1e-10
    return EquilibriumResult(
        p_star=float(p_star),
        q_star=float(q_star),
        residual=_clearing_residual(
            _endowed(curve_base, inv1), _endowed(curve_base, inv2), p_star, tol
        ),
        tol=tol,
    )


def pepq_limit_study(
    model: MarketSequenceModel,
    inv1_sched: Callable[[int], InvestorSpec],
    inv2_sched: Callable[[int], InvestorSpec],
    rate_sched: RateSchedule,
    n_list: Sequence[int],
    tol: float = 1e-4,
    solver_tol: float = 1e-10,
) -> Tuple[ConvergenceDiagnostic, ConvergenceDiagnostic]:
    """Equilibrium prices and scaled trades along a market sequence.

    Returns diagnostics for ``p*_n`` and ``q*_n / r_n``.  Endowments held
    fixed while rates diverge drive the price to the marginal limit with a
    vanishing trade ratio; endowments growing like the rates keep the price
    strictly away from it with a positive ratio.  The caller reads the
    dichotomy off the two limit estimates.
    """
    prices: List[float] = []
    ratios: List[float] = []
    for n in n_list:
        base = model.curve(int(n), 1.0)
        with warnings.catch_warnings():
            # a study sweeping kappa = 0 hits the degenerate-endowment flag
            # at every index; once per study is plenty
            warnings.simplefilter("ignore", EquilibriumWarning)
            res = pepq_solve(base, inv1_sched(int(n)), inv2_sched(int(n)), tol=solver_tol)
        prices.append(res.p_star)
        ratios.append(res.q_star / rate_sched(int(n)))
    return (
        ConvergenceDiagnostic.from_values(list(n_list), np.asarray(prices), tol),
        ConvergenceDiagnostic.from_values(list(n_list), np.asarray(ratios), tol),
    )
