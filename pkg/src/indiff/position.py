"""Optimal positions against a quoted price, plus curve sanity checks.

Given a per-unit curve ``p`` and an outside quote ``p_tilde``, the position
problem is the minimisation of the convex objective ``q*p_tilde - q*p(q)``
over all ``q``; its negative is the monetary gain from trading ``q`` units
at the quote instead of at one's own valuation.  The sign of the optimum is
decided by the marginal price alone: buy when the quote is below ``p(0)``,
sell when above, stand aside when they agree.

The sale-side variant maximises ``ell * (p_tilde - ask(ell))`` over positive
quantities on a non-decreasing ask curve; it is the same problem after the
sign flip that turns a bid curve for the negated claim into an ask curve.

:func:`validate_price_curve` renders the structural assumptions behind all
of this (non-increasing price, concave total outlay, containment in the
arbitrage interval) as a report over a finite grid, with Monte Carlo noise
absorbed by standard-error slack rather than by loosening the checks for
everyone else.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from .core import LimitCurve, PriceCurve, total_price
from .errors import (
    ArbitrageError,
    DomainError,
    EffectiveDomainError,
    NoInteriorOptimumError,
    SellRangeError,
    UnboundedObjectiveError,
)
from .numerics import minimize_unimodal

__all__ = [
    "OptimalPositionResult",
    "CurveValidationReport",
    "validate_price_curve",
    "optimal_position",
    "optimal_sale_quantity",
    "brute_force_position",
]

#: Curves accepted by the sale-side solver.
AskCurve = Union[LimitCurve, PriceCurve]


@dataclass(frozen=True)
class OptimalPositionResult:
    """Solved position against an outside quote.

    ``objective`` is the value ``q_hat * p_tilde - total(q_hat)`` in currency
    units, except for the sale problem where the sign is flipped so that it
    reads as the realised gain and ``q_hat`` counts units sold.  ``bracket``
    is the interval handed to the line search after side selection,
    ``evaluations`` the number of objective calls spent, and ``tol`` the
    interval width the search was run to.  At the reported optimum the
    objective is locally minimal up to terms of order ``tol`` squared.
    """

    q_hat: float
    objective: float
    side: str
    bracket: Tuple[float, float]
    evaluations: int
    tol: float

    def __post_init__(self) -> None:
        if self.side not in ("long", "short", "zero"):
            raise DomainError(f"side must be long, short or zero, got {self.side!r}")


@dataclass(frozen=True)
class CurveValidationReport:
    """Outcome of the structural checks on one curve over one grid.

    Each flag comes with the worst violation magnitude net of the allowed
    stderr slack (0.0 when the check passes outright).  Reports are
    reproducible: curves freeze their randomness at construction and the
    grid is stored alongside the verdicts.
    """

    monotone_ok: bool
    concave_ok: bool
    bounds_ok: bool
    monotone_worst: float
    concave_worst: float
    bounds_worst: float
    grid: np.ndarray

    @property
    def all_ok(self) -> bool:
        return self.monotone_ok and self.concave_ok and self.bounds_ok


def validate_price_curve(
    curve: PriceCurve, q_grid: np.ndarray, tol: float
) -> CurveValidationReport:
    """Check monotone price, concave total and bound containment on a grid.

    Monte Carlo curves get ``3 * stderr`` of slack in every comparison on
    top of ``tol``; deterministic curves get ``tol`` alone.  Never raises on
    a bad curve: planted violations are exactly what the report exists to
    expose.
    """
    grid = np.sort(np.asarray(q_grid, dtype=float))
    if grid.size < 3:
        raise DomainError(f"validation grid needs >= 3 points, got {grid.size}")
    if not tol > 0.0:
        raise DomainError(f"tol must be positive, got {tol}")
    p = np.atleast_1d(curve.price(grid))
    se = np.atleast_1d(curve.stderr(grid))

    # per-unit price must not rise between neighbours
    rise = np.diff(p) - 3.0 * (se[:-1] + se[1:])
    monotone_worst = float(max(0.0, np.max(rise)))

    # total outlay concave: secant slopes non-increasing; stderr of the
    # total scales with |q|, and a slope inherits it from both endpoints
    t = grid * p
    dq = np.diff(grid)
    slopes = np.diff(t) / dq
    t_se = np.abs(grid) * se
    slope_se = (t_se[:-1] + t_se[1:]) / dq
    jump = np.diff(slopes) - 3.0 * (slope_se[:-1] + slope_se[1:])
    concave_worst = float(max(0.0, np.max(jump)))

    bounds_worst = 0.0
    if curve.lower_bound is not None:
        bounds_worst = max(bounds_worst, float(np.max(curve.lower_bound - p - 3.0 * se)))
    if curve.upper_bound is not None:
        bounds_worst = max(bounds_worst, float(np.max(p - curve.upper_bound - 3.0 * se)))
    bounds_worst = max(0.0, bounds_worst)

    return CurveValidationReport(
        monotone_ok=monotone_worst <= tol,
        concave_ok=concave_worst <= tol,
        bounds_ok=bounds_worst <= tol,
        monotone_worst=monotone_worst,
        concave_worst=concave_worst,
        bounds_worst=bounds_worst,
        grid=grid,
    )


def optimal_position(
    curve: PriceCurve, p_tilde: float, tol: float = 1e-8
) -> OptimalPositionResult:
    """Best signed quantity to trade at quote ``p_tilde`` on a bid curve.

    Parameters
    ----------
    curve : PriceCurve
        Non-increasing per-unit curve with concave total outlay.
    p_tilde : float
        The outside quote.  Must lie strictly inside the curve's arbitrage
        interval wherever that interval is bounded.
    tol : float
        Width to which the optimiser's final interval is shrunk.  Also sets
        the dead band around the marginal price inside which the position
        is declared zero (widened by ``3 * stderr(0)`` for noisy curves).

    Returns
    -------
    OptimalPositionResult
        ``side`` is ``"long"`` when the quote is below the marginal price,
        ``"short"`` above, ``"zero"`` inside the dead band; the search runs
        on the matching half-line only.

    Raises
    ------
    ArbitrageError
        Quote at or beyond a finite curve bound.
    NoInteriorOptimumError
        Objective unbounded below on the searched half-line.
    """
    if not tol > 0.0:
        raise DomainError(f"tol must be positive, got {tol}")
    lo, hi = curve.lower_bound, curve.upper_bound
    if (lo is not None and not p_tilde > lo) or (hi is not None and not p_tilde < hi):
        raise ArbitrageError(
            f"price not arbitrage-free: {p_tilde} outside "
            f"({lo if lo is not None else '-inf'}, {hi if hi is not None else 'inf'})"
        )

    dead_band = tol + 3.0 * float(curve.stderr(0.0))
    if abs(p_tilde - curve.d_n) <= dead_band:
        return OptimalPositionResult(
            q_hat=0.0, objective=0.0, side="zero",
            bracket=(0.0, 0.0), evaluations=0, tol=tol,
        )
    side = "long" if p_tilde < curve.d_n else "short"

    calls = 0

    def objective(q: float) -> float:
        nonlocal calls
        calls += 1
        return q * p_tilde - float(curve.total(q))

    bracket = (0.0, 1.0) if side == "long" else (-1.0, 0.0)
    try:
        q_hat, f_hat = minimize_unimodal(objective, bracket, tol=tol)
    except UnboundedObjectiveError as exc:
        raise NoInteriorOptimumError(f"no interior optimum: {exc}") from exc
    return OptimalPositionResult(
        q_hat=float(q_hat), objective=float(f_hat), side=side,
        bracket=bracket, evaluations=calls, tol=tol,
    )


def optimal_sale_quantity(
    ask_curve: AskCurve, p_tilde: float, tol: float = 1e-8
) -> OptimalPositionResult:
    """Best positive quantity to sell at quote ``p_tilde`` on an ask curve.

    Maximises the gain ``ell * (p_tilde - ask(ell))``.  The quote must sit
    strictly between the marginal ask and the large-volume ask; otherwise no
    interior maximiser exists and the quote is outside the sellable range.
    Accepts a limit curve or an ask-oriented price curve over positive
    quantities (per-unit ask non-decreasing, total convex).

    ``q_hat`` in the result counts units sold (positive), ``objective`` is
    the realised gain, and ``side`` is always ``"short"``.
    """
    if not tol > 0.0:
        raise DomainError(f"tol must be positive, got {tol}")
    ask0 = float(ask_curve.price(0.0))
    if not p_tilde > ask0 + tol:
        raise SellRangeError(
            f"price outside sellable range: quote {p_tilde} is not above the "
            f"marginal ask {ask0}"
        )

    # Walk out until selling more stops paying (ask >= quote).  A curve with
    # a finite evaluable span is squeezed against its edge before giving up.
    ell_hi = 1.0
    last_good = 0.0
    first_bad = math.inf
    for _ in range(256):
        try:
            reached = float(ask_curve.price(ell_hi)) >= p_tilde
        except (EffectiveDomainError, DomainError):
            first_bad = ell_hi
        else:
            if reached:
                break
            last_good = ell_hi
        if math.isinf(first_bad):
            ell_hi *= 2.0
        elif first_bad - last_good <= max(tol, 1e-9 * first_bad):
            raise SellRangeError(
                f"price outside sellable range: the ask stays below {p_tilde} "
                f"over the evaluable quantities (largest checked {last_good})"
            )
        else:
            ell_hi = 0.5 * (last_good + first_bad)
    else:
        raise SellRangeError(
            f"price outside sellable range: the ask never reaches {p_tilde}"
        )

    calls = 0

    def neg_gain(ell: float) -> float:
        nonlocal calls
        calls += 1
        if ell == 0.0:
            return 0.0
        if ell < 0.0:
            return math.inf
        try:
            return ell * (float(ask_curve.price(ell)) - p_tilde)
        except (EffectiveDomainError, DomainError):
            return math.inf

    bracket = (0.0, ell_hi)
    try:
        q_hat, f_hat = minimize_unimodal(neg_gain, bracket, tol=tol)
    except UnboundedObjectiveError as exc:
        raise SellRangeError(f"price outside sellable range: {exc}") from exc
    return OptimalPositionResult(
        q_hat=float(q_hat), objective=float(-f_hat), side="short",
        bracket=bracket, evaluations=calls, tol=tol,
    )


def brute_force_position(
    curve: PriceCurve, p_tilde: float, q_lo: float, q_hi: float, n_grid: int
) -> float:
    """Grid argmin of ``q * p_tilde - q * p(q)`` over a uniform grid.

    Deliberately naive; exists as the oracle the line search is verified
    against.  Ties break toward the smallest ``|q|`` and then the smallest
    ``q``, so the symmetric quote lands on 0 whenever the grid contains it.
    """
    if n_grid < 10:
        raise DomainError(f"n_grid must be >= 10, got {n_grid}")
    if not q_lo < q_hi:
        raise DomainError(f"need q_lo < q_hi, got ({q_lo}, {q_hi})")
    grid = np.linspace(q_lo, q_hi, int(n_grid))
    obj = grid * p_tilde - np.atleast_1d(total_price(curve, grid))
    order = np.lexsort((grid, np.abs(grid), obj))
    return float(grid[order[0]])
