"""Defaultable bond model: ODE transform, price bounds, and refinement."""

import math

import numpy as np
import pytest

from indiff.errors import DomainError, IndiffError
from indiff.models.default_bond import (
    DefaultBondModel,
    DefaultBondParams,
    default_bond_F,
    default_bond_limit_curve,
    default_bond_price,
)


def make_params(intensity=0.01, horizon=1.0, **kw):
    return DefaultBondParams(
        mu=0.05, sigma=0.2,
        lambda_schedule=(intensity if callable(intensity) else (lambda n: intensity)),
        horizon=horizon, **kw,
    )


# ---------------------------------------------------------------- transform

def test_terminal_condition_survives_vanishing_horizon():
    params = make_params(horizon=1e-10)
    assert default_bond_F(params, 1, 1.0, 2.0) == pytest.approx(
        math.exp(-2.0), abs=1e-9
    )
    assert default_bond_F(params, 1, 1.0, 0.0) == pytest.approx(1.0, abs=1e-9)


def test_step_refinement_reference_point():
    params = make_params()
    coarse = default_bond_price(params, 1, 1.0, 1.0, steps=400)
    fine = default_bond_price(params, 1, 1.0, 1.0, steps=4000)
    assert abs(coarse - fine) <= 1e-8


def test_integrator_is_fourth_order():
    # stressed setting: mild parameters converge below float noise already
    params = DefaultBondParams(
        mu=0.3, sigma=0.15, lambda_schedule=lambda n: 0.8, horizon=5.0
    )
    ref = default_bond_F(params, 1, 2.0, 4.0, steps=102_400)
    errs = [
        abs(default_bond_F(params, 1, 2.0, 4.0, steps=s) - ref)
        for s in (400, 800, 1600)
    ]
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert min(orders) >= 3.8


# ---------------------------------------------------------------- price

def test_price_stays_inside_unit_interval():
    params = make_params(intensity=0.3)
    for q in np.linspace(0.05, 8.0, 15):
        p = default_bond_price(params, 1, 1.0, q)
        assert 0.0 < p < 1.0


def test_price_decreases_in_quantity():
    params = make_params(intensity=0.3)
    qs = np.linspace(0.1, 5.0, 12)
    prices = [default_bond_price(params, 1, 1.0, q) for q in qs]
    for lo, hi in zip(prices[1:], prices[:-1]):
        assert lo <= hi + 1e-10


def test_price_increases_as_default_fades():
    lam_schedule = lambda n: 10.0 ** (-n)
    params = make_params(intensity=lam_schedule)
    prices = [default_bond_price(params, n, 1.0, 1.0) for n in (1, 2, 3, 4)]
    assert all(b > a for a, b in zip(prices, prices[1:]))
    # increments shrink on the way to the default-free value 1
    increments = np.diff(prices)
    assert all(b < a for a, b in zip(increments, increments[1:]))


def test_marginal_price_sits_above_finite_quantities():
    params = make_params(intensity=0.3)
    d_1 = default_bond_price(params, 1, 1.0, 0.0)
    assert 0.0 < d_1 < 1.0
    assert default_bond_price(params, 1, 1.0, 0.5) < d_1


# ---------------------------------------------------------------- model

def test_model_curve_metadata_and_rate():
    model = DefaultBondModel(make_params(intensity=lambda n: 10.0 ** (-n)))
    curve = model.curve(2, 1.0)
    assert curve.eval_mode == "ode"
    assert curve.lower_bound == 0.0 and curve.upper_bound == 1.0
    sched = model.default_rate_schedule()
    assert sched(2) == pytest.approx(-math.log(1e-2))
    assert sched.label == "-log(lambda_n)"


def test_fixed_point_variants_disagree_but_both_price():
    printed = default_bond_price(make_params(), 1, 1.0, 1.0)
    foc = default_bond_price(
        make_params(fixed_point_variant="foc"), 1, 1.0, 1.0
    )
    assert printed != foc
    assert 0.0 < printed < 1.0 and 0.0 < foc < 1.0
    with pytest.raises(DomainError):
        make_params(fixed_point_variant="legacy")


# ---------------------------------------------------------------- limit

def test_limit_curve_is_flat_at_one_on_open_interval():
    lc = default_bond_limit_curve(2.0)
    assert lc.d == 1.0
    assert lc.delta_minus == 0.0 and lc.delta_plus == pytest.approx(0.5)
    assert lc.price(0.25) == 1.0
    assert not lc.contains(0.5) and not lc.contains(-0.1)


# ---------------------------------------------------------------- validation

def test_rejects_bad_inputs():
    with pytest.raises(DomainError):
        default_bond_price(make_params(), 1, 1.0, 1.0, steps=99)
    with pytest.raises(DomainError):
        default_bond_price(make_params(), 1, 0.0, 1.0)
    with pytest.raises(DomainError):
        default_bond_price(make_params(intensity=-0.1), 1, 1.0, 1.0)
