"""Proportional-transaction-cost call pricing through the nonlinear
Black-Scholes PDE.

The scaled-quantity price limit at ``ell`` is ``Psi(s, t; sqrt(a*ell))``
where, writing ``G = s^2 Psi_ss``, the surface solves

    Psi_t + (1/2) sigma^2 G (1 + S(b^2 G)) = 0,    Psi(s, T) = (s - K)^+,

with the curvature-amplifying nonlinearity S from the first-order ODE in
the numerics module.  Holdings enter only through ``b = sqrt(a*ell)``, and
the map ``b -> Psi(s, t; b)`` increases from the Black-Scholes price (b=0)
toward the spot itself, which makes the family an ask curve in ``ell``.

The solve runs on a log-spot grid.  Since ``s^2 Psi_ss = Psi_xx - Psi_x``
in ``x = log s``, each backward-Euler step is the nonlinear system

    Psi - dt * (sigma^2/2) * Theta(Psi_xx - Psi_x) = Psi_prev,
    Theta(G) = G * (1 + S(b^2 G)),

solved by a damped Newton iteration with a tridiagonal Jacobian; Theta is
nondecreasing, so the Jacobian is an M-matrix and each linear solve is a
banded elimination.  Backward Euler is unconditionally stable, which is
what makes large ``b`` tractable at all: the amplified diffusion near the
terminal kink is orders of magnitude too stiff for any explicit scheme at
a usable grid, so automatic step refinement there would never terminate.
Steps that still fail (Newton divergence) are bisected; exhausting the
bisection budget raises PdeStepError.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.linalg import solve_banded

from ..core import LimitCurve
from ..errors import DomainError, PdeStepError
from ..numerics import (
    SFunctionTable,
    amplified_curvature,
    amplified_curvature_slope,
    build_s_table,
)
from .blackscholes import black_scholes_price

__all__ = [
    "PdeConfig",
    "TransCostParams",
    "PsiSurface",
    "TransactionCostModel",
    "transaction_psi",
    "transaction_limit_curve",
]


@lru_cache(maxsize=1)
def _default_table() -> SFunctionTable:
    return build_s_table()


@dataclass(frozen=True)
class PdeConfig:
    """Grid and iteration controls for one surface solve.

    ``s_max_mult = None`` sizes the log-domain automatically from ``b``:
    the nonlinearity multiplies the squared volatility by up to ``1 + S``,
    so the half-width grows linearly in ``b`` on top of the usual
    six-standard-deviation band.  A numeric value forces the domain to
    ``[ref/s_max_mult, ref*s_max_mult]`` around ``ref = max(spot, strike)``.
    """

    s_max_mult: Optional[float] = None
    space_points: int = 801
    time_steps: int = 256
    clamp: Tuple[float, float] = (-1e12, 1e12)
    newton_tol: float = 1e-10
    max_newton_iter: int = 30
    max_bisections: int = 16

    def __post_init__(self) -> None:
        if self.space_points < 3:
            raise DomainError(f"space_points must be >= 3, got {self.space_points}")
        if self.time_steps < 1:
            raise DomainError(f"time_steps must be >= 1, got {self.time_steps}")
        if self.s_max_mult is not None and not self.s_max_mult > 1.0:
            raise DomainError(f"s_max_mult must exceed 1, got {self.s_max_mult}")
        if not self.clamp[0] < self.clamp[1]:
            raise DomainError(f"clamp range is empty: {self.clamp}")


@dataclass(frozen=True)
class TransCostParams:
    """Market point for the option plus the cost-proportion schedule."""

    sigma: float
    strike: float
    maturity: float
    spot: float
    valuation_time: float = 0.0
    cost_schedule: Optional[Callable[[int], float]] = None
    pde: PdeConfig = field(default_factory=PdeConfig)

    def __post_init__(self) -> None:
        if not self.sigma > 0.0:
            raise DomainError(f"sigma must be > 0, got {self.sigma}")
        if not self.strike > 0.0:
            raise DomainError(f"strike must be > 0, got {self.strike}")
        if not self.spot > 0.0:
            raise DomainError(f"spot must be > 0, got {self.spot}")
        if not self.valuation_time <= self.maturity:
            raise DomainError(
                f"valuation time {self.valuation_time} is past maturity {self.maturity}"
            )

    def cost_proportion(self, n: int) -> float:
        if self.cost_schedule is None:
            raise DomainError("no cost schedule was provided")
        lam = float(self.cost_schedule(n))
        if not 0.0 < lam < 1.0:
            raise DomainError(f"cost proportion must lie in (0,1), got lambda({n}) = {lam}")
        return lam


@dataclass(frozen=True)
class PsiSurface:
    """Backward solve of one surface, queryable at any (spot, time).

    ``values[k]`` holds the solution at remaining life ``tau_grid[k]``;
    row 0 is the exact payoff.  Interpolation is monotone-cubic in log-spot
    and linear in time.
    """

    b: float
    strike: float
    maturity: float
    x_grid: np.ndarray
    tau_grid: np.ndarray
    values: np.ndarray

    @property
    def s_grid(self) -> np.ndarray:
        return np.exp(self.x_grid)

    def value(self, s: float, t: float) -> float:
        if not s > 0.0:
            raise DomainError(f"spot must be > 0, got {s}")
        tau = self.maturity - t
        if tau < 0.0 or tau > self.tau_grid[-1] * (1 + 1e-12):
            raise DomainError(f"time {t} outside the solved span")
        x = math.log(s)
        if x < self.x_grid[0] or x > self.x_grid[-1]:
            raise DomainError(f"spot {s} outside the solved grid")
        tau = min(tau, self.tau_grid[-1])
        k = int(np.searchsorted(self.tau_grid, tau, side="right") - 1)
        k = min(k, len(self.tau_grid) - 2)
        with np.errstate(divide="ignore", over="ignore"):
            # the payoff row has exactly flat stretches; pchip's slope
            # harmonic mean divides by zero there and masks it afterwards
            lo = PchipInterpolator(self.x_grid, self.values[k])(x)
            hi = PchipInterpolator(self.x_grid, self.values[k + 1])(x)
        span = self.tau_grid[k + 1] - self.tau_grid[k]
        w = (tau - self.tau_grid[k]) / span if span > 0 else 0.0
        return float((1.0 - w) * lo + w * hi)


def _half_width(sigma: float, tau: float, b: float) -> float:
    # 6 standard deviations for the linear part plus room for the
    # amplified-diffusion band, whose extent grows like b^(2/3) (the
    # effective volatility scale of the large-argument S branch); the
    # prefactor is calibrated so widening the band further moves the
    # b = 10 value by less than the space-discretisation error
    return sigma * math.sqrt(tau) * 6.0 + 1.7 * b ** (2.0 / 3.0)


class _StepSolver:
    """One backward-Euler step family on a fixed log-spot grid."""

    def __init__(self, x: np.ndarray, b: float, sigma: float,
                 table: SFunctionTable, cfg: PdeConfig):
        self.x = x
        self.h = x[1] - x[0]
        self.b = b
        self.half_sig2 = 0.5 * sigma * sigma
        self.table = table
        self.cfg = cfg
        h = self.h
        # row coefficients of G = Psi_xx - Psi_x on interior nodes
        self.c_dn = 1.0 / (h * h) + 1.0 / (2.0 * h)
        self.c_md = -2.0 / (h * h)
        self.c_up = 1.0 / (h * h) - 1.0 / (2.0 * h)

    def curvature(self, psi: np.ndarray) -> np.ndarray:
        return (self.c_dn * psi[:-2] + self.c_md * psi[1:-1] + self.c_up * psi[2:])

    def theta(self, g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Amplified curvature and its slope in G, clamp applied."""
        if self.b == 0.0:
            return g, np.ones_like(g)
        b2 = self.b * self.b
        arg = np.clip(b2 * g, self.cfg.clamp[0], self.cfg.clamp[1])
        th = amplified_curvature(self.table, arg) / b2
        slope = amplified_curvature_slope(self.table, arg)
        slope = np.where((b2 * g > self.cfg.clamp[0]) & (b2 * g < self.cfg.clamp[1]),
                         slope, 0.0)
        return th, slope

    def newton_step(self, prev: np.ndarray, dtau: float,
                    bc_hi: float) -> Optional[np.ndarray]:
        cfg = self.cfg
        n = prev.size
        psi = prev.copy()
        psi[0] = 0.0
        psi[-1] = bc_hi
        c = self.half_sig2 * dtau
        for _ in range(cfg.max_newton_iter):
            g = self.curvature(psi)
            th, slope = self.theta(g)
            resid = np.zeros(n)
            resid[1:-1] = psi[1:-1] - prev[1:-1] - c * th
            resid[0] = psi[0] - 0.0
            resid[-1] = psi[-1] - bc_hi

            # banded layout: entry (0, j) pairs with row j-1, (2, j) with row j+1
            band = np.zeros((3, n))
            band[1, 0] = band[1, -1] = 1.0
            band[1, 1:-1] = 1.0 - c * slope * self.c_md
            band[0, 2:] = -c * slope * self.c_up
            band[2, :-2] = -c * slope * self.c_dn

            try:
                delta = solve_banded((1, 1), band, -resid)
            except np.linalg.LinAlgError:
                return None
            psi = psi + delta
            if not np.all(np.isfinite(psi)):
                return None
            # node-relative test: an absolute one would be dominated by the
            # far-field boundary value, which dwarfs the strike region
            if np.max(np.abs(delta) / (1.0 + np.abs(psi))) <= cfg.newton_tol:
                return psi
        return None

    def advance(self, prev: np.ndarray, dtau: float, bc_hi: float, depth: int = 0) -> np.ndarray:
        out = self.newton_step(prev, dtau, bc_hi)
        if out is not None:
            return out
        if depth >= self.cfg.max_bisections:
            raise PdeStepError(
                f"PDE step failure: Newton diverged at dtau={dtau:.3e} "
                f"after {self.cfg.max_bisections} bisections (b={self.b})"
            )
        mid = self.advance(prev, 0.5 * dtau, bc_hi, depth + 1)
        return self.advance(mid, 0.5 * dtau, bc_hi, depth + 1)


def transaction_psi(
    params: TransCostParams,
    b: float,
    config: Optional[PdeConfig] = None,
    table: Optional[SFunctionTable] = None,
) -> PsiSurface:
    """Solve the surface for one value of the holdings parameter ``b``.

    Time runs in remaining life ``tau = maturity - t`` with quadratically
    graded steps, dense where the payoff kink lives.  The boundary values
    pin the solution to 0 on the left and to ``s - K`` on the right, the
    exact large-spot behaviour of the continuum problem.
    """
    if not b >= 0.0:
        raise DomainError(f"b must be >= 0, got {b}")
    cfg = config if config is not None else params.pde
    tab = table if table is not None else _default_table()
    tau_total = params.maturity - params.valuation_time

    ref = max(params.spot, params.strike)
    if cfg.s_max_mult is not None:
        w = math.log(cfg.s_max_mult)
    else:
        w = _half_width(params.sigma, max(tau_total, 1e-12), b)
    x_c = math.log(ref)
    x = np.linspace(x_c - w, x_c + w, cfg.space_points)
    payoff = np.maximum(np.exp(x) - params.strike, 0.0)

    if tau_total == 0.0:
        vals = payoff[None, :].copy()
        return PsiSurface(
            b=b, strike=params.strike, maturity=params.maturity,
            x_grid=x, tau_grid=np.array([0.0]), values=vals,
        )

    # quadratic grading clusters steps at the kink; index 0 is tau = 0
    m = cfg.time_steps
    tau_grid = tau_total * (np.arange(m + 1) / m) ** 2

    solver = _StepSolver(x, b, params.sigma, tab, cfg)
    values = np.empty((m + 1, cfg.space_points))
    values[0] = payoff
    psi = payoff.copy()
    bc_hi = float(np.exp(x[-1]) - params.strike)
    for k in range(1, m + 1):
        psi = solver.advance(psi, tau_grid[k] - tau_grid[k - 1], bc_hi)
        values[k] = psi
    return PsiSurface(
        b=b, strike=params.strike, maturity=params.maturity,
        x_grid=x, tau_grid=tau_grid, values=values,
    )


def _default_b_grid(b_cap: float) -> np.ndarray:
    # geometric refinement toward 0 where the curve turns fastest,
    # dense enough that monotone-cubic interpolation in b is below the
    # PDE discretization error
    small = np.geomspace(1e-3, 1.0, 25)
    large = np.linspace(1.0, max(b_cap, 1.0 + 1e-9), 28)[1:]
    grid = np.concatenate([small, large])
    return grid[grid <= b_cap * (1 + 1e-12)]


def transaction_limit_curve(
    params: TransCostParams,
    a: float,
    config: Optional[PdeConfig] = None,
    ell_cap: float = 110.0,
) -> LimitCurve:
    """Ask curve ``ell -> Psi(spot, t; sqrt(a*ell))`` from cached solves.

    Surfaces are computed once on a fixed b-grid up to ``sqrt(a*ell_cap)``
    and interpolated monotonically in ``b``; evaluations beyond the cap
    raise rather than extrapolate.  The ``ell -> 0`` anchor is the PDE's
    own b=0 value so the curve is internally consistent; it sits within
    discretization error of the closed-form Black-Scholes price.
    """
    if not a > 0.0:
        raise DomainError(f"risk aversion must be > 0, got {a}")
    if not ell_cap > 0.0:
        raise DomainError(f"ell_cap must be > 0, got {ell_cap}")
    b_cap = math.sqrt(a * ell_cap)
    b_nodes = np.concatenate([[0.0], _default_b_grid(b_cap)])
    vals = np.array([
        transaction_psi(params, float(bb), config).value(params.spot, params.valuation_time)
        for bb in b_nodes
    ])
    if np.any(np.diff(vals) <= 0.0):
        j = int(np.argmin(np.diff(vals)))
        raise PdeStepError(
            "PDE step failure: cached surfaces lost monotonicity in b near "
            f"b={b_nodes[j]:.4g} ({vals[j]:.6g} -> {vals[j+1]:.6g}); refine the grid"
        )
    interp = PchipInterpolator(b_nodes, vals)
    cap = float(b_nodes[-1])

    def eval_ell(ell: float) -> float:
        bb = math.sqrt(a * ell)
        if bb > cap * (1 + 1e-12):
            raise DomainError(
                f"ell={ell} beyond the cached range (ell_cap={cap * cap / a:.6g})"
            )
        return float(interp(min(bb, cap)))

    return LimitCurve(
        d=float(vals[0]),
        delta_minus=0.0,
        delta_plus=None,
        _eval=eval_ell,
        kind="ask",
    )


class TransactionCostModel:
    """Holds parameters and exposes the limit-curve route.

    Prices at a finite cost proportion are represented only through the
    limit curve together with the squared-cost rate: the finite-index
    utility problem needs machinery (shadow portfolios over a running
    holdings state) outside this package's scope, and no acceptance path
    requires it.
    """

    def __init__(self, params: TransCostParams):
        self.params = params

    def rate(self, n: int) -> float:
        lam = self.params.cost_proportion(n)
        return 1.0 / (lam * lam)

    def limit_curve(self, a: float, config: Optional[PdeConfig] = None,
                    ell_cap: float = 110.0) -> LimitCurve:
        return transaction_limit_curve(self.params, a, config, ell_cap)

    def black_scholes_anchor(self) -> float:
        p = self.params
        return black_scholes_price(p.spot, p.valuation_time, p.sigma, p.strike, p.maturity)
