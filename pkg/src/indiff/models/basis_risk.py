"""Basis-risk market: a traded asset imperfectly correlated with the factor
that drives the claim.

The traded asset has drift ``mu(y)`` and volatility ``sigma(y)``; the factor
``Y`` follows ``dY = b(Y) dt + a_y(Y) dW`` and the claim pays ``payoff(Y_T)``.
Correlation ``rho_n`` between the asset's driver and ``W`` tends to one along
the market sequence, and positions must grow like ``r_n = 1/(1 - rho_n^2)``
for the price to keep a nontrivial limit.

With ``lam = mu/sigma`` (assumed bounded) and the path functionals

    M = int lam(Y) dW,   V = int lam(Y)^2 dt,   G_n = -rho_n * M - V/2,

the per-unit price of ``q`` units is

    p(q) = -(r_n/(a*q)) * log( E[exp(G_n - (a*q/r_n) * payoff)] / E[exp(G_n)] ).

Two evaluation routes: Monte Carlo (always available; exact one-shot sampling
when all coefficients are constants, Euler otherwise) and one-dimensional
Gauss-Hermite quadrature (constant coefficients with ``b = 0``).  Both share
the same formula, so they oracle-check each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy.special import logsumexp

from ..core import LimitCurve, MarketSequenceModel, PriceCurve, RateSchedule
from ..errors import DomainError, ModelAssumptionError, QuadratureUnavailableError
from ..numerics import gauss_hermite_expectation

__all__ = [
    "MonteCarloConfig",
    "BasisRiskParams",
    "BasisRiskModel",
    "basis_risk_price_mc",
    "basis_risk_price_quadrature",
    "basis_risk_limit",
    "basis_risk_limit_curve",
]

Coefficient = Union[float, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class MonteCarloConfig:
    """Path-sampling configuration.

    ``time_steps`` counts Euler steps per unit of horizon; it is ignored when
    every coefficient is constant, where the driving increments are sampled
    exactly in one shot.  Path counts are rounded up to an even number so
    antithetic pairs always close.
    """

    paths: int = 200_000
    time_steps: int = 252
    seed: int = 0
    antithetic: bool = True


@dataclass(frozen=True)
class BasisRiskParams:
    """Coefficients, correlation schedule, horizon, and payoff.

    Each coefficient may be a plain number or a vectorised function of the
    factor level.  ``payoff_bounds`` may declare the claim's range; when
    absent, curve bounds fall back to the sampled range of the payoff.
    """

    mu: Coefficient
    sigma: Coefficient
    b: Coefficient
    a_y: Coefficient
    rho_schedule: Callable[[int], float]
    horizon: float
    y0: float
    payoff: Callable[[np.ndarray], np.ndarray]
    mc: MonteCarloConfig = field(default_factory=MonteCarloConfig)
    payoff_bounds: Optional[Tuple[float, float]] = None

    def __post_init__(self) -> None:
        if not self.horizon > 0.0:
            raise DomainError(f"horizon must be > 0, got {self.horizon}")

    @property
    def constant_coefficients(self) -> bool:
        return all(
            isinstance(c, (int, float)) for c in (self.mu, self.sigma, self.b, self.a_y)
        )

    def rho(self, n: int) -> float:
        r = float(self.rho_schedule(n))
        if not abs(r) < 1.0:
            raise ModelAssumptionError(
                f"model assumption violated: |rho_n| < 1 required, got rho({n}) = {r}"
            )
        return r

    def rate(self, n: int) -> float:
        r = self.rho(n)
        return 1.0 / (1.0 - r * r)


def _as_fn(c: Coefficient) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(c, (int, float)):
        value = float(c)
        return lambda y: np.full_like(y, value)
    return c


def _fold_pairs(x: np.ndarray) -> np.ndarray:
    half = x.size // 2
    return 0.5 * (x[:half] + x[half:])


class _PathFunctionals:
    """Frozen draws of (M, V, payoff) shared by every curve of one model."""

    def __init__(self, m: np.ndarray, v: np.ndarray, payoff: np.ndarray, pairs: bool):
        self.m = m
        self.v = v
        self.payoff = payoff
        self.pairs = pairs  # antithetic halves, foldable for error estimates


def _simulate(params: BasisRiskParams) -> _PathFunctionals:
    cfg = params.mc
    if cfg.paths < 2:
        raise DomainError(f"need at least 2 paths, got {cfg.paths}")
    n_paths = cfg.paths + cfg.paths % 2
    rng = np.random.Generator(np.random.Philox(key=cfg.seed))
    T = params.horizon

    if params.constant_coefficients:
        sig = float(params.sigma)  # type: ignore[arg-type]
        if not sig > 0.0:
            raise ModelAssumptionError(
                f"model assumption violated: sigma must be > 0, got {sig}"
            )
        lam = float(params.mu) / sig  # type: ignore[arg-type]
        half = n_paths // 2
        w_half = rng.standard_normal(half) * math.sqrt(T)
        w_t = np.concatenate([w_half, -w_half]) if cfg.antithetic else np.concatenate(
            [w_half, rng.standard_normal(n_paths - half) * math.sqrt(T)]
        )
        y_t = params.y0 + float(params.b) * T + float(params.a_y) * w_t  # type: ignore[arg-type]
        m = lam * w_t
        v = np.full(n_paths, lam * lam * T)
    else:
        mu_f, sig_f = _as_fn(params.mu), _as_fn(params.sigma)
        b_f, ay_f = _as_fn(params.b), _as_fn(params.a_y)
        steps = max(1, round(cfg.time_steps * T))
        dt = T / steps
        sqdt = math.sqrt(dt)
        half = n_paths // 2
        y = np.full(n_paths, float(params.y0))
        m = np.zeros(n_paths)
        v = np.zeros(n_paths)
        for _ in range(steps):
            z_half = rng.standard_normal(half)
            if cfg.antithetic:
                dw = np.concatenate([z_half, -z_half]) * sqdt
            else:
                dw = np.concatenate([z_half, rng.standard_normal(n_paths - half)]) * sqdt
            sig = sig_f(y)
            if np.any(sig <= 0.0):
                raise ModelAssumptionError(
                    "model assumption violated: sigma(y) must stay > 0 along paths"
                )
            lam = mu_f(y) / sig
            m += lam * dw
            v += lam * lam * dt
            y = y + b_f(y) * dt + ay_f(y) * dw
        y_t = y

    b_vals = np.asarray(params.payoff(y_t), dtype=float)
    if not np.all(np.isfinite(b_vals)):
        raise ModelAssumptionError(
            "model assumption violated: payoff produced non-finite values"
        )
    return _PathFunctionals(m, v, b_vals, pairs=cfg.antithetic)


def _log_mean_exp(x: np.ndarray) -> float:
    return float(logsumexp(x) - math.log(x.size))


def _mc_price_stderr(
    fn: _PathFunctionals, rate: float, a: float, q: float, rho: float
) -> Tuple[float, float]:
    """Price and delta-method standard error at one nonzero quantity."""
    g = -rho * fn.m - 0.5 * fn.v
    c = a * q / rate
    x_num = g - c * fn.payoff
    log_num = _log_mean_exp(x_num)
    log_den = _log_mean_exp(g)
    price = -(rate / (a * q)) * (log_num - log_den)

    w = np.exp(x_num - log_num)  # weights scaled to mean 1
    u = np.exp(g - log_den)
    xi = w - u
    if fn.pairs:
        xi = _fold_pairs(xi)
    se = float(np.std(xi, ddof=1) / math.sqrt(xi.size))
    return price, (rate / (a * abs(q))) * se


def _mc_marginal(fn: _PathFunctionals, rho: float) -> Tuple[float, float]:
    """Marginal price d_n: payoff expectation under the density tilt exp(G)."""
    g = -rho * fn.m - 0.5 * fn.v
    log_den = _log_mean_exp(g)
    u = np.exp(g - log_den)
    d = float(np.mean(u * fn.payoff))
    xi = u * (fn.payoff - d)
    if fn.pairs:
        xi = _fold_pairs(xi)
    se = float(np.std(xi, ddof=1) / math.sqrt(xi.size))
    return d, se


class BasisRiskModel(MarketSequenceModel):
    """Curve factory; ``route`` picks Monte Carlo or quadrature evaluation."""

    def __init__(self, params: BasisRiskParams, route: str = "mc", order: int = 201):
        if route not in ("mc", "quadrature"):
            raise DomainError(f"route must be 'mc' or 'quadrature', got {route!r}")
        if route == "quadrature":
            _require_quadrature(params)
        self.params = params
        self.route = route
        self.order = order
        self._paths: Optional[_PathFunctionals] = None

    def _functionals(self) -> _PathFunctionals:
        # Drawn once and shared across all indices: common random numbers
        # make the sequence in n smooth, and repeated pricing deterministic.
        if self._paths is None:
            self._paths = _simulate(self.params)
        return self._paths

    def _bounds(self, sampled: Optional[np.ndarray]) -> Tuple[float, float]:
        if self.params.payoff_bounds is not None:
            return self.params.payoff_bounds
        if sampled is not None:
            return float(np.min(sampled)), float(np.max(sampled))
        lo, hi = _quadrature_nodes_range(self.params, self.order)
        return lo, hi

    def curve(self, n: int, a: float) -> PriceCurve:
        self._check_index(n)
        rho = self.params.rho(n)
        rate = self.params.rate(n)

        if self.route == "mc":
            fn = self._functionals()
            d_n, _ = _mc_marginal(fn, rho)

            def price(q: np.ndarray) -> np.ndarray:
                return np.array(
                    [_mc_price_stderr(fn, rate, a, float(x), rho)[0] for x in q]
                )

            def stderr(q: np.ndarray) -> np.ndarray:
                out = np.empty_like(q)
                for i, x in enumerate(q):
                    if x == 0.0:
                        out[i] = _mc_marginal(fn, rho)[1]
                    else:
                        out[i] = _mc_price_stderr(fn, rate, a, float(x), rho)[1]
                return out

            lo, hi = self._bounds(fn.payoff)
            return PriceCurve(
                n=n,
                a=a,
                d_n=d_n,
                lower_bound=lo,
                upper_bound=hi,
                eval_mode="monte_carlo",
                _price=price,
                _stderr=stderr,
            )

        order = self.order
        d_n = _quadrature_marginal(self.params, rho, order)

        # nodes hoisted out of the closure: grid scans hit price() with 1e5
        # quantities and per-call hermgauss would dominate the runtime
        t, w = np.polynomial.hermite.hermgauss(order)
        lam = float(self.params.mu) / float(self.params.sigma)  # type: ignore[arg-type]
        ay = float(self.params.a_y)  # type: ignore[arg-type]
        wt = math.sqrt(2.0 * self.params.horizon) * t
        log_w = np.log(w) - rho * lam * wt
        payoff_nodes = np.asarray(
            self.params.payoff(self.params.y0 + ay * wt), dtype=float
        )
        log_den = logsumexp(log_w)

        def price_q(q: np.ndarray) -> np.ndarray:
            c = (a / rate) * np.asarray(q, dtype=float)
            log_num = logsumexp(log_w[None, :] - np.outer(c, payoff_nodes), axis=1)
            return -(rate / (a * np.asarray(q))) * (log_num - log_den)

        lo, hi = self._bounds(None)
        return PriceCurve(
            n=n,
            a=a,
            d_n=d_n,
            lower_bound=lo,
            upper_bound=hi,
            eval_mode="quadrature",
            _price=price_q,
        )

    def default_rate_schedule(self) -> RateSchedule:
        return RateSchedule(lambda n: self.params.rate(n), label="1/(1-rho_n^2)")


def basis_risk_price_mc(
    params: BasisRiskParams, n: int, a: float, q: float
) -> Tuple[float, float]:
    """Monte Carlo price and standard error at quantity ``q``.

    The standard error comes from the delta method applied to the log-ratio
    of the two sample means, which share paths; at ``q = 0`` the price is
    the tilted payoff expectation rather than a difference quotient.
    """
    if not a > 0.0:
        raise DomainError(f"risk aversion must be > 0, got {a}")
    fn = _simulate(params)
    rho = params.rho(n)
    if q == 0.0:
        return _mc_marginal(fn, rho)
    return _mc_price_stderr(fn, params.rate(n), a, q, rho)


def _require_quadrature(params: BasisRiskParams) -> None:
    if not params.constant_coefficients:
        raise QuadratureUnavailableError(
            "quadrature unavailable: coefficients must be constants"
        )
    if float(params.b) != 0.0:  # type: ignore[arg-type]
        raise QuadratureUnavailableError(
            "quadrature unavailable: factor drift must be 0"
        )
    if not float(params.sigma) > 0.0:  # type: ignore[arg-type]
        raise ModelAssumptionError(
            f"model assumption violated: sigma must be > 0, got {params.sigma}"
        )


def _quadrature_nodes_range(params: BasisRiskParams, order: int) -> Tuple[float, float]:
    t, _ = np.polynomial.hermite.hermgauss(order)
    ay = float(params.a_y)  # type: ignore[arg-type]
    y = params.y0 + ay * math.sqrt(2.0 * params.horizon) * t
    vals = np.asarray(params.payoff(y), dtype=float)
    return float(np.min(vals)), float(np.max(vals))


def _quadrature_marginal(params: BasisRiskParams, rho: float, order: int) -> float:
    lam = float(params.mu) / float(params.sigma)  # type: ignore[arg-type]
    ay = float(params.a_y)  # type: ignore[arg-type]
    T = params.horizon

    def num(w: np.ndarray) -> np.ndarray:
        return np.exp(-rho * lam * w) * params.payoff(params.y0 + ay * w)

    e_num = gauss_hermite_expectation(num, 0.0, T, order)
    e_den = gauss_hermite_expectation(lambda w: np.exp(-rho * lam * w), 0.0, T, order)
    return e_num / e_den


def basis_risk_price_quadrature(
    params: BasisRiskParams, n: int, a: float, q: float, order: int = 201
) -> float:
    """Deterministic price by Gauss-Hermite integration over the terminal
    driver; requires constant coefficients and zero factor drift."""
    _require_quadrature(params)
    if not a > 0.0:
        raise DomainError(f"risk aversion must be > 0, got {a}")
    rho = params.rho(n)
    if q == 0.0:
        return _quadrature_marginal(params, rho, order)
    rate = params.rate(n)
    lam = float(params.mu) / float(params.sigma)  # type: ignore[arg-type]
    ay = float(params.a_y)  # type: ignore[arg-type]
    T = params.horizon
    c = a * q / rate
    # common factor exp(-lam^2 T / 2) cancels in the ratio; left out of both
    def num(w: np.ndarray) -> np.ndarray:
        return np.exp(-rho * lam * w - c * params.payoff(params.y0 + ay * w))

    e_num = gauss_hermite_expectation(num, 0.0, T, order)
    e_den = gauss_hermite_expectation(lambda w: np.exp(-rho * lam * w), 0.0, T, order)
    return -(rate / (a * q)) * (math.log(e_num) - math.log(e_den))


def _limit_factor_law(params: BasisRiskParams) -> Tuple[float, float]:
    """Mean and variance of the terminal factor in the fully correlated
    market, where it acquires the risk-neutral drift ``b - a_y * lam``."""
    if not params.constant_coefficients:
        raise QuadratureUnavailableError(
            "quadrature unavailable: the correlation-one limit needs constant coefficients"
        )
    sig = float(params.sigma)  # type: ignore[arg-type]
    if not sig > 0.0:
        raise ModelAssumptionError(
            f"model assumption violated: sigma must be > 0, got {sig}"
        )
    lam = float(params.mu) / sig  # type: ignore[arg-type]
    ay = float(params.a_y)  # type: ignore[arg-type]
    T = params.horizon
    mean = params.y0 + (float(params.b) - ay * lam) * T  # type: ignore[arg-type]
    return mean, ay * ay * T


def basis_risk_limit(
    params: BasisRiskParams, a: float, ell: float, order: int = 201
) -> float:
    """Scaled-quantity price limit as correlation tends to one.

    The value is the exponential certainty equivalent of ``a * ell`` units
    of the payoff under the drift-shifted factor law; ``ell = 0`` returns
    the plain expectation, its continuous extension.  Bounded payoffs keep
    every ``ell`` inside the effective domain.
    """
    if not a > 0.0:
        raise DomainError(f"risk aversion must be > 0, got {a}")
    mean, var = _limit_factor_law(params)
    if ell == 0.0:
        return gauss_hermite_expectation(params.payoff, mean, var, order)
    mgf = gauss_hermite_expectation(
        lambda y: np.exp(-a * ell * params.payoff(y)), mean, var, order
    )
    return -math.log(mgf) / (a * ell)


def basis_risk_limit_curve(
    params: BasisRiskParams, a: float, order: int = 201
) -> LimitCurve:
    """The same limit packaged as a curve object with unbounded domain."""
    if not a > 0.0:
        raise DomainError(f"risk aversion must be > 0, got {a}")
    mean, var = _limit_factor_law(params)
    d = gauss_hermite_expectation(params.payoff, mean, var, order)
    return LimitCurve(
        d=d,
        delta_minus=None,
        delta_plus=None,
        _eval=lambda ell: basis_risk_limit(params, a, ell, order),
    )
