"""Estimation of scaled-price limits and verdicts about position growth.

Everything here renders asymptotic statements with finitely many market
indices, so the outputs are estimates with their evidence attached rather
than certified limits.  The two reporting shapes are

* :class:`ConvergenceDiagnostic` for one scalar sequence: values, gaps, an
  extrapolated limit, and a Cauchy flag judged on the last third of the
  gaps;
* :class:`RateVerdict` for the optimal-position ratios ``q_hat_n / r_n``:
  tail statistics standing in for liminf and limsup, and a categorical
  verdict.

The scaled price in market ``n`` is the per-unit price at quantity
``ell * r_n`` under risk aversion ``a_n``.  Sweeping ``ell`` over a grid and
keeping the convergent points estimates the limit curve and the effective
domain around 0; the optimal-position ratios are then compared against the
argmin of ``ell * p_tilde - ell * p(ell)`` on that curve, which is the only
possible limit point under a strictly concave limiting total.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import PchipInterpolator

from .core import (
    LimitCurve,
    MarketSequenceModel,
    RateSchedule,
    RiskAversionSchedule,
)
from .errors import (
    DomainError,
    EffectiveDomainError,
    NonUniqueLimitError,
    UnboundedObjectiveError,
)
from .numerics import minimize_unimodal
from .position import optimal_position

__all__ = [
    "ConvergenceDiagnostic",
    "RateVerdict",
    "scaled_price_sequence",
    "estimate_limit_curve",
    "probe_delta",
    "rate_ratio_sequence",
    "corollary_limit",
    "check_strict_concavity",
]

log = logging.getLogger(__name__)

#: Cauchy tolerance for deterministic models when none is given.
DEFAULT_CAUCHY_TOL = 1e-4


def _tail_count(k: int) -> int:
    return max(1, math.ceil(k / 3))


@dataclass(frozen=True)
class ConvergenceDiagnostic:
    """One scalar sequence with its own convergence evidence.

    ``gaps`` are the exact successive differences of ``values``.  The
    sequence is declared Cauchy when the last ``ceil(k/3)`` gaps (k values)
    are all below tolerance in magnitude; for Monte Carlo sequences the
    tolerance of each gap is widened by three standard errors of both
    endpoints.  ``limit_estimate`` is the Aitken delta-squared value when
    the gap magnitudes are non-increasing, otherwise the last value; the
    error bar is the last gap magnitude either way.
    """

    indices: Tuple[int, ...]
    values: np.ndarray
    gaps: np.ndarray
    limit_estimate: float
    error_bar: float
    used_aitken: bool
    cauchy_ok: bool
    tol: float

    @classmethod
    def from_values(
        cls,
        indices: Sequence[int],
        values: np.ndarray,
        tol: float,
        gap_slack: Optional[np.ndarray] = None,
    ) -> "ConvergenceDiagnostic":
        idx = tuple(int(n) for n in indices)
        if len(idx) < 2:
            raise DomainError(f"need at least 2 indices, got {len(idx)}")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise DomainError(f"indices must be strictly increasing, got {idx}")
        vals = np.asarray(values, dtype=float)
        if vals.shape != (len(idx),):
            raise DomainError("one value per index required")
        if not tol > 0.0:
            raise DomainError(f"tol must be positive, got {tol}")
        gaps = np.diff(vals)
        allow = np.full(gaps.shape, tol)
        if gap_slack is not None:
            allow = allow + np.asarray(gap_slack, dtype=float)
        m = _tail_count(len(idx))
        cauchy = bool(np.all(np.abs(gaps[-m:]) <= allow[-m:]))

        used_aitken = False
        limit = float(vals[-1])
        mags = np.abs(gaps)
        if len(vals) >= 3 and np.all(np.diff(mags) <= 0.0):
            d2 = (vals[-1] - vals[-2]) - (vals[-2] - vals[-3])
            if d2 != 0.0:
                limit = float(vals[-1] - (vals[-1] - vals[-2]) ** 2 / d2)
                used_aitken = True
        return cls(
            indices=idx,
            values=vals,
            gaps=gaps,
            limit_estimate=limit,
            error_bar=float(mags[-1]) if mags.size else 0.0,
            used_aitken=used_aitken,
            cauchy_ok=cauchy,
            tol=tol,
        )


@dataclass(frozen=True)
class RateVerdict:
    """Optimal-position ratios against their theoretical limit behaviour.

    ``tail_min``/``tail_max`` are taken over the last third of the ratios
    and stand in for liminf and limsup.  The verdict is computed from those
    two numbers alone:

    * ``degenerate``       every tail ratio within ``tol`` of 0;
    * ``consistent_long``  tail_min > 0 and the tail is stable;
    * ``consistent_short`` tail_max < 0 and the tail is stable;
    * ``inconsistent``     anything else (mixed signs or a drifting tail).

    Stability means the tail spread is at most a quarter of the tail's own
    magnitude plus ``tol``; a crude bar, but an honest one for finitely
    many indices.  ``ell_star`` carries the limiting argmin when a limit
    curve was supplied.
    """

    indices: Tuple[int, ...]
    ratios: np.ndarray
    tail_min: float
    tail_max: float
    verdict: str
    tol: float
    ell_star: Optional[float] = None


def _resolve_tol(tol: Optional[float]) -> float:
    if tol is None:
        return DEFAULT_CAUCHY_TOL
    if not tol > 0.0:
        raise DomainError(f"tol must be positive, got {tol}")
    return float(tol)


def scaled_price_sequence(
    model: MarketSequenceModel,
    ra_sched: RiskAversionSchedule,
    rate_sched: RateSchedule,
    ell: float,
    n_list: Sequence[int],
    tol: Optional[float] = None,
) -> ConvergenceDiagnostic:
    """Prices per unit at quantity ``ell * r_n``, index by index.

    Monte Carlo models widen each gap's tolerance by three standard errors
    of both endpoints; everything else uses ``tol`` alone (default 1e-4).
    """
    tol = _resolve_tol(tol)
    vals = []
    ses = []
    for n in n_list:
        curve = model.curve(int(n), ra_sched(int(n)))
        q = ell * rate_sched(int(n))
        vals.append(float(curve.price(q)))
        ses.append(float(curve.stderr(q)))
    se = np.asarray(ses)
    slack = 3.0 * (se[:-1] + se[1:])
    return ConvergenceDiagnostic.from_values(
        list(n_list), np.asarray(vals), tol, gap_slack=slack
    )


def estimate_limit_curve(
    model,
    ra_sched: RiskAversionSchedule,
    rate_sched: RateSchedule,
    ell_grid: np.ndarray,
    n_list: Sequence[int],
    tol: Optional[float] = None,
) -> LimitCurve:
    """Empirical limit curve over the convergent part of an ``ell`` grid.

    Models that publish an exact limit curve of their own (no finite-index
    curves to extrapolate from) are passed through directly, at the risk
    aversion of the largest index.

    Otherwise each grid point gets a :func:`scaled_price_sequence`; points
    whose sequence is not Cauchy are excluded (and logged, since they are
    exactly what :func:`probe_delta` wants to know about).  The returned
    curve interpolates the extrapolated limits monotonically; its effective
    domain ends at the first excluded point on each side, so evaluation in
    the final grid cell before an endpoint is a short extrapolation.
    """
    if not isinstance(model, MarketSequenceModel) and hasattr(model, "limit_curve"):
        return model.limit_curve(ra_sched(int(n_list[-1])))

    tol = _resolve_tol(tol)
    grid = np.sort(np.asarray(ell_grid, dtype=float))
    if not (grid[0] < 0.0 < grid[-1]):
        raise DomainError(
            f"ell grid must straddle 0, got [{grid[0]}, {grid[-1]}]"
        )
    if not np.any(grid == 0.0):
        grid = np.sort(np.append(grid, 0.0))

    ok: List[bool] = []
    limits: List[float] = []
    for ell in grid:
        diag = scaled_price_sequence(model, ra_sched, rate_sched, float(ell), n_list, tol)
        ok.append(diag.cauchy_ok)
        limits.append(diag.limit_estimate)
    ok_arr = np.asarray(ok)

    i0 = int(np.argmin(np.abs(grid)))
    if not ok_arr[i0]:
        raise EffectiveDomainError(
            "scaled prices do not converge even at ell = 0; no limit curve"
        )
    lo = i0
    while lo > 0 and ok_arr[lo - 1]:
        lo -= 1
    hi = i0
    while hi < len(grid) - 1 and ok_arr[hi + 1]:
        hi += 1
    excluded = [float(e) for e, good in zip(grid, ok_arr) if not good]
    if excluded:
        log.info("excluded non-convergent ell points: %s", excluded)

    nodes = grid[lo : hi + 1]
    node_vals = np.asarray(limits[lo : hi + 1])
    d = float(limits[i0])
    # continuity at 0: the smallest nonzero scaled quantities must price
    # close to the marginal limit
    for j in (i0 - 1, i0 + 1):
        if lo <= j <= hi:
            log.info(
                "continuity check at ell=%g: |p - d| = %.3e",
                grid[j], abs(limits[j] - d),
            )

    rise = np.diff(node_vals)
    if np.any(rise > tol):
        log.warning("estimated limit prices are not non-increasing (worst rise %.3e)",
                    float(np.max(rise)))
    totals = nodes * node_vals
    if nodes.size >= 3:
        curv = np.diff(totals, 2)
        if np.any(curv > tol):
            log.warning("estimated limit total is not concave (worst curvature %.3e)",
                        float(np.max(curv)))

    delta_minus = float(grid[lo - 1]) if lo > 0 else None
    delta_plus = float(grid[hi + 1]) if hi < len(grid) - 1 else None
    if nodes.size >= 2:
        interp = PchipInterpolator(nodes, node_vals, extrapolate=True)
        evaluator: Callable[[float], float] = lambda ell: float(interp(ell))
    else:  # only ell = 0 converged
        evaluator = lambda ell: d
    return LimitCurve(
        d=d,
        delta_minus=delta_minus,
        delta_plus=delta_plus,
        _eval=evaluator,
    )


def probe_delta(
    model: MarketSequenceModel,
    ra_sched: RiskAversionSchedule,
    rate_sched: RateSchedule,
    ell_grid: np.ndarray,
    n_list: Sequence[int],
    tol: Optional[float] = None,
) -> Tuple[float, float]:
    """Estimate the effective domain endpoints from a grid scan.

    Returns the outermost grid points of the largest contiguous run of
    convergent ``ell`` values containing 0, so each estimate errs inward by
    at most one grid cell.  An empty convergent set returns ``(0.0, 0.0)``
    with a warning.
    """
    tol = _resolve_tol(tol)
    grid = np.sort(np.asarray(ell_grid, dtype=float))
    if not (grid[0] < 0.0 and grid[-1] > 0.0):
        raise DomainError(
            f"probe grid must span both signs, got [{grid[0]}, {grid[-1]}]"
        )

    def converges(ell: float) -> bool:
        return scaled_price_sequence(
            model, ra_sched, rate_sched, ell, n_list, tol
        ).cauchy_ok

    i0 = int(np.argmin(np.abs(grid)))
    if not converges(float(grid[i0])):
        warnings.warn(
            "no convergent scaled prices anywhere near ell = 0; "
            "effective domain estimated as empty",
            stacklevel=2,
        )
        return (0.0, 0.0)
    lo = i0
    while lo > 0 and converges(float(grid[lo - 1])):
        lo -= 1
    hi = i0
    while hi < len(grid) - 1 and converges(float(grid[hi + 1])):
        hi += 1
    return (min(float(grid[lo]), 0.0), max(float(grid[hi]), 0.0))


def rate_ratio_sequence(
    model: MarketSequenceModel,
    ra_sched: RiskAversionSchedule,
    rate_sched: RateSchedule,
    p_tilde_sched: Callable[[int], float],
    n_list: Sequence[int],
    tol: float = 1e-4,
    limit_curve: Optional[LimitCurve] = None,
    position_tol: float = 1e-8,
) -> RateVerdict:
    """Optimal positions divided by the scaling rates, with a verdict.

    Solves the position problem at quote ``p_tilde_sched(n)`` per index and
    reports ``q_hat_n / r_n``.  When ``limit_curve`` is supplied, the
    limiting argmin at the final index's quote is attached as ``ell_star``
    (and its preconditions, strict concavity included, are enforced).
    """
    if len(n_list) < 2:
        raise DomainError(f"need at least 2 indices, got {len(n_list)}")
    ratios = []
    for n in n_list:
        curve = model.curve(int(n), ra_sched(int(n)))
        res = optimal_position(curve, float(p_tilde_sched(int(n))), tol=position_tol)
        ratios.append(res.q_hat / rate_sched(int(n)))
    arr = np.asarray(ratios)
    m = _tail_count(len(arr))
    tail = arr[-m:]
    t_min, t_max = float(np.min(tail)), float(np.max(tail))
    spread = t_max - t_min
    stable = spread <= 0.25 * max(abs(t_min), abs(t_max)) + tol
    if max(abs(t_min), abs(t_max)) <= tol:
        verdict = "degenerate"
    elif t_min > 0.0 and stable:
        verdict = "consistent_long"
    elif t_max < 0.0 and stable:
        verdict = "consistent_short"
    else:
        verdict = "inconsistent"

    ell_star = None
    if limit_curve is not None:
        ell_star = corollary_limit(limit_curve, float(p_tilde_sched(int(n_list[-1]))))
    return RateVerdict(
        indices=tuple(int(n) for n in n_list),
        ratios=arr,
        tail_min=t_min,
        tail_max=t_max,
        verdict=verdict,
        tol=tol,
        ell_star=ell_star,
    )


def check_strict_concavity(
    limit_curve: LimitCurve, ell_grid: np.ndarray, tol: float
) -> bool:
    """True when all second differences of ``ell * p(ell)`` are below ``-tol``.

    The test is taken literally on the given grid, so ``tol`` scales with
    the square of the spacing.  Grid points must lie inside the curve's
    effective domain.
    """
    grid = np.sort(np.asarray(ell_grid, dtype=float))
    if grid.size < 5:
        raise DomainError(f"concavity grid needs >= 5 points, got {grid.size}")
    if not tol >= 0.0:
        raise DomainError(f"tol must be >= 0, got {tol}")
    totals = np.asarray([limit_curve.total(float(e)) for e in grid])
    return bool(np.all(np.diff(totals, 2) < -tol))


def corollary_limit(
    limit_curve: LimitCurve,
    p_tilde: float,
    tol: float = 1e-8,
    concavity_tol: float = 1e-12,
    probe_span: float = 4.0,
) -> float:
    """The unique limiting position ratio: argmin of ``ell*p_tilde - total``.

    Requires a strictly concave limiting total, checked on a 33-point grid
    across the effective domain (clipped to ``+-probe_span`` when a side is
    unbounded).  A flat or insufficiently concave curve has a whole face of
    minimisers, which is exactly the degenerate situation the error names.
    """
    lo = limit_curve.delta_minus if limit_curve.delta_minus is not None else -probe_span
    hi = limit_curve.delta_plus if limit_curve.delta_plus is not None else probe_span
    pad = 1e-3 * (hi - lo)
    grid = np.linspace(lo + pad, hi - pad, 33)
    if not check_strict_concavity(limit_curve, grid, concavity_tol):
        raise NonUniqueLimitError(
            "non-unique limit candidates: the limiting total outlay is not "
            "strictly concave on the probed domain"
        )

    def objective(ell: float) -> float:
        if not limit_curve.contains(ell):
            return math.inf
        return ell * p_tilde - limit_curve.total(ell)

    seed = (max(lo * 0.5, -1.0), min(hi * 0.5, 1.0))
    try:
        ell_star, _ = minimize_unimodal(objective, seed, tol=tol)
    except UnboundedObjectiveError as exc:
        raise NonUniqueLimitError(f"non-unique limit candidates: {exc}") from exc
    return float(ell_star)
