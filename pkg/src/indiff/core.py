"""Core vocabulary: price curves, model sequences, and scaling limits.

The package studies a sequence of markets indexed by ``n``.  In market ``n``
an investor with risk aversion ``a`` quotes a per-unit bid price ``p(q)`` for
``q`` units of a claim.  Three structural facts drive everything else and are
encoded as invariants of :class:`PriceCurve`:

* ``p`` is non-increasing in ``q`` (buying more per unit never costs more),
* the total outlay ``q * p(q)`` is concave in ``q``,
* ``p`` stays inside the arbitrage interval of the claim, and ``p(0)`` equals
  the marginal price ``d_n``.

Risk aversion enters only through the product with quantity: the curve at
aversion ``a`` evaluated at ``q`` equals the curve at aversion 1 evaluated at
``a * q``.  :func:`verify_ra_switch` spot-checks that identity on any model.

A :class:`MarketSequenceModel` produces one curve per index.  Scaling limits
along ``q = ell * r_n`` for a divergent rate sequence ``r_n`` are described
by :class:`LimitCurve`, whose effective domain ``(delta_minus, delta_plus)``
records where the rescaled prices actually converge.

Public API
----------
RiskAversionSchedule, RateSchedule
    Positive per-index coefficient sequences.
PriceCurve
    Lazily evaluated price curve for one market index.
MarketSequenceModel
    Abstract factory of curves, one per index.
LimitCurve
    Limiting per-unit price as a function of the scaled quantity.
total_price(curve, q)
    Total outlay ``q * p(q)`` with the exact zero at ``q = 0``.
verify_ra_switch(model, n, a, q, tol)
    Check the aversion/quantity exchange identity at one point.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

from .errors import DomainError, EffectiveDomainError

__all__ = [
    "EVAL_MODES",
    "RiskAversionSchedule",
    "RateSchedule",
    "PriceCurve",
    "MarketSequenceModel",
    "LimitCurve",
    "total_price",
    "verify_ra_switch",
]

#: Recognised evaluation routes for a price curve.
EVAL_MODES = ("closed_form", "quadrature", "monte_carlo", "ode", "pde_limit")


@dataclass(frozen=True)
class RiskAversionSchedule:
    """Risk aversion per market index; values must be strictly positive."""

    fn: Callable[[int], float]
    label: str = "a_n"

    def __call__(self, n: int) -> float:
        value = float(self.fn(n))
        if not value > 0.0:
            raise DomainError(f"risk aversion at n={n} must be > 0, got {value}")
        return value


@dataclass(frozen=True)
class RateSchedule:
    """Scaling rates ``r_n``: positive, non-decreasing in ``n``.

    Divergence to infinity cannot be observed from finitely many values, so
    it is declared by the caller via ``diverges`` rather than checked.
    Monotonicity is spot-checked wherever sequences are actually built.
    """

    fn: Callable[[int], float]
    label: str = "r_n"
    diverges: bool = True

    def __call__(self, n: int) -> float:
        value = float(self.fn(n))
        if not value > 0.0:
            raise DomainError(f"rate at n={n} must be > 0, got {value}")
        return value


@dataclass(frozen=True)
class PriceCurve:
    """Per-unit bid prices for one market index at one risk aversion.

    ``lower_bound``/``upper_bound`` delimit the claim's arbitrage interval;
    ``None`` means unbounded on that side (never encoded as a huge float).
    The evaluator is lazy: nothing is computed until :meth:`price` is called.
    Monte Carlo curves freeze their draws at construction, so repeated calls
    are deterministic and consistent with the reported standard error.
    """

    n: int
    a: float
    d_n: float
    lower_bound: Optional[float]
    upper_bound: Optional[float]
    eval_mode: str
    _price: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    _stderr: Optional[Callable[[np.ndarray], np.ndarray]] = field(
        default=None, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        if self.eval_mode not in EVAL_MODES:
            raise DomainError(
                f"eval_mode must be one of {EVAL_MODES}, got {self.eval_mode!r}"
            )
        if not self.a > 0.0:
            raise DomainError(f"risk aversion must be > 0, got {self.a}")
        lo, hi = self.lower_bound, self.upper_bound
        if lo is not None and hi is not None and not lo < hi:
            raise DomainError(f"arbitrage interval is empty: ({lo}, {hi})")

    def price(self, q: np.ndarray | float) -> np.ndarray | float:
        """Per-unit price at quantity ``q``; ``q = 0`` returns ``d_n`` exactly."""
        arr = np.atleast_1d(np.asarray(q, dtype=float))
        out = np.full_like(arr, self.d_n)
        nz = arr != 0.0
        if np.any(nz):
            out[nz] = self._price(arr[nz])
        return out if isinstance(q, np.ndarray) else float(out[0])

    def stderr(self, q: np.ndarray | float) -> np.ndarray | float:
        """Standard error of :meth:`price`; exactly 0 for deterministic modes."""
        arr = np.atleast_1d(np.asarray(q, dtype=float))
        if self._stderr is None:
            out = np.zeros_like(arr)
        else:
            out = np.asarray(self._stderr(arr), dtype=float)
        return out if isinstance(q, np.ndarray) else float(out[0])

    def total(self, q: np.ndarray | float) -> np.ndarray | float:
        """Total outlay ``q * price(q)``, exactly 0 at ``q = 0``."""
        return total_price(self, q)


def total_price(curve: PriceCurve, q: np.ndarray | float) -> np.ndarray | float:
    """Total outlay ``q * p(q)``; the ``q = 0`` branch is exact, not 0 * nan."""
    arr = np.atleast_1d(np.asarray(q, dtype=float))
    out = np.zeros_like(arr)
    nz = arr != 0.0
    if np.any(nz):
        out[nz] = arr[nz] * np.atleast_1d(curve.price(arr[nz]))
    return out if isinstance(q, np.ndarray) else float(out[0])


class MarketSequenceModel(ABC):
    """Factory of price curves indexed by ``n``.

    Subclasses fix the market family and expose one curve per index via
    :meth:`curve`.  ``index_range`` declares the valid indices as an
    inclusive pair ``(n_min, n_max)`` with ``None`` for "no upper bound";
    :meth:`curve` must reject anything outside it with a domain error.
    """

    @abstractmethod
    def curve(self, n: int, a: float) -> PriceCurve:
        """Price curve for market ``n`` at risk aversion ``a``."""

    @property
    def index_range(self) -> Tuple[int, Optional[int]]:
        return (1, None)

    def default_rate_schedule(self) -> RateSchedule:
        raise NotImplementedError(f"{type(self).__name__} declares no default rates")

    def default_ra_schedule(self) -> RiskAversionSchedule:
        return RiskAversionSchedule(lambda n: 1.0, label="1")

    def _check_index(self, n: int) -> None:
        lo, hi = self.index_range
        if n < lo or (hi is not None and n > hi):
            raise DomainError(
                f"index n={n} outside declared range [{lo}, {hi if hi is not None else 'inf'}]"
            )


@dataclass(frozen=True)
class LimitCurve:
    """Limiting per-unit price ``ell -> p(ell)`` along ``q = ell * r_n``.

    ``d`` is the limiting marginal price (the value at ``ell = 0``).  The
    effective domain is the open interval ``(delta_minus, delta_plus)``;
    ``None`` means unbounded on that side.  Evaluation outside raises.

    ``kind`` records the quoting convention: a ``"bid"`` curve is
    non-increasing with concave total, an ``"ask"`` curve (a bid curve for
    the negated claim, sign-flipped) is non-decreasing with convex total.
    """

    d: float
    delta_minus: Optional[float]
    delta_plus: Optional[float]
    _eval: Callable[[float], float] = field(repr=False, compare=False)
    kind: str = "bid"

    def __post_init__(self) -> None:
        if self.kind not in ("bid", "ask"):
            raise DomainError(f"kind must be 'bid' or 'ask', got {self.kind!r}")
        if self.delta_minus is not None and not self.delta_minus <= 0.0:
            raise DomainError(f"delta_minus must be <= 0, got {self.delta_minus}")
        if self.delta_plus is not None and not self.delta_plus > 0.0:
            raise DomainError(f"delta_plus must be > 0, got {self.delta_plus}")

    def contains(self, ell: float) -> bool:
        """True when ``ell`` lies in the open effective domain (or is 0)."""
        if ell == 0.0:
            return True
        if self.delta_minus is not None and ell <= self.delta_minus:
            return False
        if self.delta_plus is not None and ell >= self.delta_plus:
            return False
        return True

    def price(self, ell: float) -> float:
        """Limiting per-unit price at scaled quantity ``ell``."""
        if ell == 0.0:
            return self.d
        if not self.contains(ell):
            raise EffectiveDomainError(
                f"ell outside effective domain: {ell} not in "
                f"({self.delta_minus if self.delta_minus is not None else '-inf'}, "
                f"{self.delta_plus if self.delta_plus is not None else 'inf'})"
            )
        return float(self._eval(ell))

    def total(self, ell: float) -> float:
        """Limiting total outlay ``ell * p(ell)``; 0 at ``ell = 0``."""
        if ell == 0.0:
            return 0.0
        return ell * self.price(ell)


def verify_ra_switch(
    model: MarketSequenceModel, n: int, a: float, q: float, tol: float
) -> bool:
    """Check ``p_a(q) == p_1(a * q)`` at one point, within ``tol``.

    Monte Carlo evaluation gets three standard errors of slack on top of
    ``tol``.  ``q`` must be nonzero: at zero the identity is trivially true
    and says nothing about the model.
    """
    if q == 0.0:
        raise DomainError("ra-switch check needs q != 0; at q = 0 it is vacuous")
    if not a > 0.0:
        raise DomainError(f"risk aversion must be > 0, got {a}")
    curve_a = model.curve(n, a)
    curve_1 = model.curve(n, 1.0)
    lhs = curve_a.price(q)
    rhs = curve_1.price(a * q)
    slack = 3.0 * (curve_a.stderr(q) + curve_1.stderr(a * q))
    return bool(abs(lhs - rhs) <= tol + slack)
