"""Zero-rate Black-Scholes call price, the frictionless reference point."""

from __future__ import annotations

import math

from scipy.stats import norm

from ..errors import DomainError

__all__ = ["black_scholes_price"]


def black_scholes_price(s: float, t: float, sigma: float, strike: float, maturity: float) -> float:
    """European call struck at ``strike``, zero interest rate, valued at
    time ``t`` with expiry ``maturity``.

    Degenerate cases (at expiry, zero volatility, boundary spots) collapse
    to intrinsic value ``max(s - strike, 0)``.
    """
    if s < 0.0 or strike < 0.0 or sigma < 0.0:
        raise DomainError(
            f"need s, strike, sigma >= 0, got ({s}, {strike}, {sigma})"
        )
    tau = maturity - t
    if tau < 0.0:
        raise DomainError(f"valuation time {t} is past maturity {maturity}")
    if tau == 0.0 or sigma == 0.0 or s == 0.0 or strike == 0.0:
        return max(s - strike, 0.0)
    root = sigma * math.sqrt(tau)
    d1 = (math.log(s / strike) + 0.5 * root * root) / root
    return float(s * norm.cdf(d1) - strike * norm.cdf(d1 - root))
