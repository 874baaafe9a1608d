"""Basis-risk model: Monte Carlo and quadrature routes checked against each
other and against independent dense-grid integration."""

import numpy as np
import pytest

from indiff.errors import DomainError, ModelAssumptionError, QuadratureUnavailableError
from indiff.models.basis_risk import (
    BasisRiskModel,
    BasisRiskParams,
    MonteCarloConfig,
    basis_risk_limit,
    basis_risk_limit_curve,
    basis_risk_price_mc,
    basis_risk_price_quadrature,
)

T = 1.0
A_Y = 0.3
LAMBDA = 0.1 / 0.2  # market price of risk mu/sigma


def make_params(rho=0.9, payoff=np.tanh, paths=200_000, seed=7, b=0.0, mu=0.1):
    return BasisRiskParams(
        mu=mu, sigma=0.2, b=b, a_y=A_Y,
        rho_schedule=(rho if callable(rho) else (lambda n: rho)),
        horizon=T, y0=0.0, payoff=payoff,
        mc=MonteCarloConfig(paths=paths, seed=seed),
    )


def normal_grid(mean, var, half_width=12.0, points=400_001):
    sd = np.sqrt(var)
    y = np.linspace(mean - half_width * sd, mean + half_width * sd, points)
    pdf = np.exp(-((y - mean) ** 2) / (2 * var)) / np.sqrt(2 * np.pi * var)
    return y, pdf


# ---------------------------------------------------------------- exactness

def test_constant_claim_prices_at_its_value_under_both_routes():
    # the hedgeable part is everything; utility weights cancel identically
    const = lambda y: np.full_like(np.asarray(y, dtype=float), 0.37)
    params = make_params(rho=0.0, payoff=const, paths=4_000)
    for q in (0.5, 3.0, -2.0):
        price, stderr = basis_risk_price_mc(params, 1, 1.0, q)
        assert price == pytest.approx(0.37, abs=1e-12)
        assert stderr == pytest.approx(0.0, abs=1e-12)
        assert basis_risk_price_quadrature(params, 1, 1.0, q) == pytest.approx(
            0.37, abs=1e-12
        )


def test_quadrature_marginal_matches_dense_grid_oracle():
    params = make_params()
    for n in (4, 64):
        rho = 0.9
        y, pdf = normal_grid(-A_Y * rho * LAMBDA * T, A_Y**2 * T)
        oracle = np.trapezoid(np.tanh(y) * pdf, y)
        got = basis_risk_price_quadrature(params, n, 1.0, 0.0)
        assert got == pytest.approx(oracle, abs=1e-12)


def test_mc_marginal_agrees_with_quadrature_within_noise():
    params = make_params(seed=3)
    model = BasisRiskModel(params)
    curve = model.curve(1, 1.0)
    exact = basis_risk_price_quadrature(params, 1, 1.0, 0.0)
    assert abs(curve.d_n - exact) <= 3.0 * curve.stderr(0.0)
    assert curve.stderr(0.0) > 0.0


# ---------------------------------------------------------------- mc vs quad

def test_mc_tracks_quadrature_at_unit_quantity():
    params = make_params(seed=5)
    price, stderr = basis_risk_price_mc(params, 1, 1.0, 1.0)
    exact = basis_risk_price_quadrature(params, 1, 1.0, 1.0)
    assert abs(price - exact) <= 3.0 * stderr


def test_mc_tracks_quadrature_across_randomized_settings():
    rng = np.random.default_rng(42)
    for trial in range(12):
        rho = float(rng.uniform(-0.95, 0.95))
        a = float(rng.uniform(0.2, 3.0))
        q = float(rng.uniform(-3.0, 3.0))
        params = make_params(rho=rho, paths=60_000, seed=100 + trial)
        price, stderr = basis_risk_price_mc(params, 2, a, q)
        exact = basis_risk_price_quadrature(params, 2, a, q)
        assert abs(price - exact) <= 3.0 * max(stderr, 1e-12), (
            f"trial {trial}: rho={rho}, a={a}, q={q}"
        )


def test_bid_curve_decreases_in_quantity_within_mc_slack():
    model = BasisRiskModel(make_params(seed=9))
    curve = model.curve(4, 1.0)
    qs = np.array([-2.0, -0.5, 0.0, 0.5, 2.0, 5.0])
    prices = curve.price(qs)
    errs = curve.stderr(qs)
    # common random numbers keep the slack from swamping the signal
    for i in range(len(qs) - 1):
        assert prices[i + 1] <= prices[i] + 3.0 * (errs[i] + errs[i + 1])


# ---------------------------------------------------------------- determinism

def test_common_random_numbers_make_repeat_calls_identical():
    params = make_params(paths=20_000, seed=13)
    first = basis_risk_price_mc(params, 1, 1.0, 1.5)
    second = basis_risk_price_mc(params, 1, 1.0, 1.5)
    assert first == second


def test_seed_changes_the_draw():
    a_run = basis_risk_price_mc(make_params(paths=20_000, seed=1), 1, 1.0, 1.5)
    b_run = basis_risk_price_mc(make_params(paths=20_000, seed=2), 1, 1.0, 1.5)
    assert a_run[0] != b_run[0]


def test_model_shares_paths_across_indices():
    model = BasisRiskModel(make_params(rho=lambda n: np.sqrt(1 - 1 / n),
                                       paths=20_000, seed=21))
    p4 = model.curve(4, 1.0).price(1.0)
    p16 = model.curve(16, 1.0).price(1.0)
    # same functionals, new tilt: repeating the pair must reproduce both
    assert model.curve(4, 1.0).price(1.0) == p4
    assert model.curve(16, 1.0).price(1.0) == p16


# ---------------------------------------------------------------- limit

def test_limit_matches_dense_grid_tilt_oracle():
    params = make_params()
    y, pdf = normal_grid(-A_Y * LAMBDA * T, A_Y**2 * T)
    for ell in (0.5, 2.0):
        inner = np.trapezoid(np.exp(-ell * np.tanh(y)) * pdf, y)
        oracle = -np.log(inner) / ell
        assert basis_risk_limit(params, 1.0, ell) == pytest.approx(
            oracle, abs=1e-10
        )


def test_limit_center_is_fully_correlated_marginal():
    params = make_params()
    y, pdf = normal_grid(-A_Y * LAMBDA * T, A_Y**2 * T)
    oracle = np.trapezoid(np.tanh(y) * pdf, y)
    assert basis_risk_limit(params, 1.0, 0.0) == pytest.approx(oracle, abs=1e-10)
    # continuity: tiny ell stays near the center value
    assert basis_risk_limit(params, 1.0, 1e-8) == pytest.approx(oracle, abs=1e-6)


def test_limit_curve_object_is_unbounded_and_consistent():
    params = make_params()
    lc = basis_risk_limit_curve(params, 1.0)
    assert lc.delta_minus is None and lc.delta_plus is None
    assert lc.price(0.7) == pytest.approx(basis_risk_limit(params, 1.0, 0.7))
    assert lc.price(0.0) == lc.d


def test_scaled_prices_approach_limit_as_rho_tends_to_one():
    params = make_params(rho=lambda n: np.sqrt(1 - 1 / n))
    lc = basis_risk_limit_curve(params, 1.0)
    ell = 0.5
    gaps = []
    for n in (4, 64, 4096):
        rate = params.rate(n)
        p_n = basis_risk_price_quadrature(params, n, 1.0, ell * rate)
        gaps.append(abs(p_n - lc.price(ell)))
    assert gaps[-1] < gaps[0]
    assert gaps[-1] < 5e-4


# ---------------------------------------------------------------- validation

def test_quadrature_requires_constant_coefficients():
    varying = make_params(mu=lambda t: 0.1)
    with pytest.raises(QuadratureUnavailableError):
        basis_risk_price_quadrature(varying, 1, 1.0, 1.0)
    with pytest.raises(QuadratureUnavailableError):
        BasisRiskModel(varying, route="quadrature")
    drifting = make_params(b=0.05)
    with pytest.raises(QuadratureUnavailableError):
        basis_risk_price_quadrature(drifting, 1, 1.0, 1.0)
    # Monte Carlo stays available for both
    assert np.isfinite(basis_risk_price_mc(drifting, 1, 1.0, 1.0)[0])


def test_route_sets_eval_mode():
    params = make_params(paths=10_000)
    assert BasisRiskModel(params).curve(1, 1.0).eval_mode == "monte_carlo"
    assert (
        BasisRiskModel(params, route="quadrature").curve(1, 1.0).eval_mode
        == "quadrature"
    )
    with pytest.raises(DomainError):
        BasisRiskModel(params, route="exact")


def test_degenerate_correlation_rejected():
    params = make_params(rho=1.0)
    with pytest.raises(ModelAssumptionError):
        basis_risk_price_quadrature(params, 1, 1.0, 1.0)


def test_needs_at_least_two_paths():
    params = make_params(paths=1)
    with pytest.raises(DomainError):
        basis_risk_price_mc(params, 1, 1.0, 1.0)
