"""Gaussian residual model: the one family where everything is affine."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from indiff.errors import DomainError
from indiff.models.gaussian import (
    GaussianResidualModel,
    GaussianResidualParams,
    gaussian_limit_curve,
    gaussian_optimal_position,
    gaussian_price,
)

PARAMS = GaussianResidualParams(lambda n: 1.0, lambda n: 0.1)


# ---------------------------------------------------------------- pricing

def test_price_reference_values():
    assert gaussian_price(PARAMS, 1, 1.0, 2.0) == pytest.approx(0.9, abs=1e-15)
    assert gaussian_price(PARAMS, 1, 1.0, 0.0) == 1.0
    assert gaussian_price(PARAMS, 1, 0.5, -4.0) == pytest.approx(1.1, abs=1e-15)
    assert gaussian_price(PARAMS, 1, 1.0, -2.0) == pytest.approx(1.1, abs=1e-15)


def test_curve_metadata():
    curve = GaussianResidualModel(PARAMS).curve(3, 2.0)
    assert curve.eval_mode == "closed_form"
    assert curve.lower_bound is None and curve.upper_bound is None
    assert curve.d_n == 1.0
    assert curve.stderr(1.3) == 0.0


def test_default_rate_is_inverse_variance():
    params = GaussianResidualParams(lambda n: 1.0, lambda n: 1.0 / n)
    sched = GaussianResidualModel(params).default_rate_schedule()
    assert sched(25) == pytest.approx(25.0)
    assert sched.diverges


def test_gamma2_must_be_positive():
    bad = GaussianResidualParams(lambda n: 1.0, lambda n: 0.0)
    with pytest.raises(DomainError):
        gaussian_price(bad, 1, 1.0, 1.0)


# ---------------------------------------------------------------- position

def test_optimal_position_reference_values():
    assert gaussian_optimal_position(PARAMS, 1, 1.0, 0.8) == pytest.approx(2.0)
    assert gaussian_optimal_position(PARAMS, 1, 1.0, 1.0) == 0.0
    assert gaussian_optimal_position(PARAMS, 1, 1.0, 1.2) == pytest.approx(-2.0)


@settings(max_examples=80, deadline=None)
@given(
    a=st.floats(0.01, 50.0),
    g2=st.floats(1e-3, 10.0),
    p_gap=st.floats(-5.0, 5.0),
)
def test_position_is_exact_foc_root(a, g2, p_gap):
    params = GaussianResidualParams(lambda n: 1.0, lambda n: g2)
    q = gaussian_optimal_position(params, 1, a, 1.0 + p_gap)
    # marginal revenue d - a q g2 equals the quoted price at the optimum
    assert 1.0 - a * q * g2 == pytest.approx(1.0 + p_gap, abs=1e-10)


# ---------------------------------------------------------------- limit

def test_limit_curve_is_affine_with_slope_half_a_v():
    lc = gaussian_limit_curve(1.0, 2.0, variance_rate=0.5)
    ells = np.linspace(-3, 3, 13)
    for ell in ells:
        assert lc.price(ell) == pytest.approx(1.0 - 0.5 * ell, abs=1e-15)
    assert lc.delta_minus is None and lc.delta_plus is None


def test_scaled_prices_match_limit_exactly_when_d_is_constant():
    # with d_n constant and r_n = 1/gamma2_n the prefactor cancels at every n,
    # not just in the limit
    params = GaussianResidualParams(lambda n: 0.9, lambda n: 1.0 / n)
    model = GaussianResidualModel(params)
    rate = model.default_rate_schedule()
    lc = gaussian_limit_curve(0.9, 1.0)
    for n in (1, 10, 1000):
        curve = model.curve(n, 1.0)
        for ell in (-1.0, 0.3, 2.5):
            assert curve.price(ell * rate(n)) == pytest.approx(
                lc.price(ell), abs=1e-12
            )


@settings(max_examples=50, deadline=None)
@given(q=st.floats(-100.0, 100.0), a=st.floats(0.1, 10.0))
def test_price_is_affine_in_quantity(q, a):
    p = gaussian_price(PARAMS, 1, a, q)
    assert p == pytest.approx(1.0 - 0.5 * a * q * 0.1, rel=1e-12, abs=1e-12)
