"""Large-index behavior: scaled price sequences, admissible-range probing,
rate-ratio verdicts, and the limit-curve argmin."""

import warnings

import numpy as np
import pytest

from indiff.asymptotics import (
    ConvergenceDiagnostic,
    check_strict_concavity,
    corollary_limit,
    estimate_limit_curve,
    probe_delta,
    rate_ratio_sequence,
    scaled_price_sequence,
)
from indiff.core import RateSchedule, RiskAversionSchedule
from indiff.errors import NonUniqueLimitError
from indiff.models.basis_risk import (
    BasisRiskModel,
    BasisRiskParams,
    basis_risk_limit_curve,
)
from indiff.models.default_bond import (
    DefaultBondModel,
    DefaultBondParams,
    default_bond_limit_curve,
)
from indiff.models.gaussian import (
    GaussianResidualModel,
    GaussianResidualParams,
    gaussian_limit_curve,
)

UNIT_A = RiskAversionSchedule(lambda n: 1.0)
DEEP_N = [2**k for k in range(4, 20)]


def shrinking_model():
    # marginal price 1 + 1/n, variance 1/n: the canonical convergent setup
    return GaussianResidualModel(
        GaussianResidualParams(lambda n: 1.0 + 1.0 / n, lambda n: 1.0 / n)
    )


def linear_rate():
    return RateSchedule(lambda n: float(n), label="n")


def sqrt_rate():
    return RateSchedule(lambda n: float(np.sqrt(n)), label="sqrt(n)")


# ---------------------------------------------------------------- sequences

def test_scaled_sequence_converges_at_the_right_rate():
    diag = scaled_price_sequence(shrinking_model(), UNIT_A, linear_rate(),
                                 0.4, DEEP_N)
    assert diag.cauchy_ok
    assert diag.limit_estimate == pytest.approx(0.8, abs=1e-6)
    # values are d_n - 0.2 exactly
    assert diag.values[0] == pytest.approx(1.0 + 1.0 / DEEP_N[0] - 0.2, abs=1e-12)


def test_zero_volume_sequence_tracks_marginal_price():
    diag = scaled_price_sequence(shrinking_model(), UNIT_A, linear_rate(),
                                 0.0, DEEP_N)
    assert diag.cauchy_ok
    assert diag.limit_estimate == pytest.approx(1.0, abs=1e-6)


def test_wrong_scaling_is_flagged_not_masked():
    diag = scaled_price_sequence(shrinking_model(), UNIT_A, sqrt_rate(),
                                 0.5, DEEP_N)
    assert not diag.cauchy_ok
    at_zero = scaled_price_sequence(shrinking_model(), UNIT_A, sqrt_rate(),
                                    0.0, DEEP_N)
    assert at_zero.cauchy_ok


def test_diagnostic_gap_bookkeeping():
    vals = np.array([1.5, 1.25, 1.125, 1.0625])
    diag = ConvergenceDiagnostic.from_values([1, 2, 3, 4], vals, tol=1e-3)
    assert np.array_equal(diag.gaps, np.diff(vals))
    assert not diag.cauchy_ok
    assert diag.used_aitken
    # geometric decay: Aitken nails the limit from four terms
    assert diag.limit_estimate == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------- limit curve

def test_estimated_gaussian_limit_is_the_analytic_line():
    lc = estimate_limit_curve(shrinking_model(), UNIT_A, linear_rate(),
                              np.linspace(-2, 2, 9), DEEP_N)
    for ell in np.linspace(-1.9, 1.9, 7):
        assert lc.price(ell) == pytest.approx(1.0 - 0.5 * ell, abs=1e-9)


def test_estimated_basis_risk_limit_matches_quadrature():
    params = BasisRiskParams(
        mu=0.1, sigma=0.2, b=0.0, a_y=0.3,
        rho_schedule=lambda n: np.sqrt(1 - 1 / n),
        horizon=1.0, y0=0.0, payoff=np.tanh,
    )
    model = BasisRiskModel(params, route="quadrature")
    lc_est = estimate_limit_curve(
        model, UNIT_A, model.default_rate_schedule(),
        np.linspace(-1, 1, 5), [4**k for k in range(1, 9)],
    )
    lc_exact = basis_risk_limit_curve(params, 1.0)
    for ell in (-0.8, 0.25, 0.75):
        assert lc_est.price(ell) == pytest.approx(lc_exact.price(ell), abs=5e-4)


# ---------------------------------------------------------------- probing

def test_gaussian_admits_the_whole_probe_grid():
    grid = np.linspace(-3, 3, 13)
    lo, hi = probe_delta(shrinking_model(), UNIT_A, linear_rate(), grid, DEEP_N)
    assert lo == -3.0 and hi == 3.0


def test_default_bond_right_endpoint_tracks_the_known_threshold():
    model = DefaultBondModel(
        DefaultBondParams(mu=0.05, sigma=0.2,
                          lambda_schedule=lambda n: 10.0 ** (-n), horizon=1.0)
    )
    grid = np.arange(-5, 13) / 10.0  # exact 0.0 at the pivot
    lo, hi = probe_delta(model, UNIT_A, model.default_rate_schedule(),
                         grid, [2, 3, 4, 5, 6], tol=2e-2)
    assert 0.8 <= hi <= 1.2
    assert lo <= 0.0


def test_empty_convergent_set_warns_and_degenerates():
    # both signs covered but 0 itself absent; nothing converges at sqrt(n)
    grid = np.array([-2.0, -1.0, -0.5, 0.5, 1.0, 2.0])
    with pytest.warns(UserWarning):
        lo, hi = probe_delta(shrinking_model(), UNIT_A, sqrt_rate(),
                             grid, DEEP_N)
    assert (lo, hi) == (0.0, 0.0)


# ---------------------------------------------------------------- verdicts

def test_long_verdict_with_corollary_target():
    lc = gaussian_limit_curve(1.0, 1.0)
    verdict = rate_ratio_sequence(
        shrinking_model(), UNIT_A, linear_rate(), lambda n: 0.7,
        [10, 100, 1000, 10_000], limit_curve=lc,
    )
    assert verdict.verdict == "consistent_long"
    assert verdict.tail_min > 0.0
    assert verdict.ratios[-1] == pytest.approx(0.3, abs=1e-3)
    assert verdict.ell_star == pytest.approx(0.3, abs=1e-6)


def test_short_and_degenerate_verdicts():
    model = shrinking_model()
    short = rate_ratio_sequence(model, UNIT_A, linear_rate(), lambda n: 1.3,
                                [10, 100, 1000, 10_000])
    assert short.verdict == "consistent_short"
    assert short.ratios[-1] == pytest.approx(-0.3, abs=1e-3)
    marginal = rate_ratio_sequence(
        model, UNIT_A, linear_rate(), lambda n: 1.0 + 1.0 / n,
        [10, 100, 1000, 10_000],
    )
    assert marginal.verdict == "degenerate"


def test_price_at_optimum_approaches_limit_at_ell_star():
    # at the optimum the quoted price itself converges to the limit curve
    model = shrinking_model()
    lc = gaussian_limit_curve(1.0, 1.0)
    ell_star = corollary_limit(lc, 0.7)
    prices = []
    for n in (100, 10_000, 1_000_000):
        curve = model.curve(n, 1.0)
        q_hat = (curve.d_n - 0.7) / (1.0 / n)
        prices.append(curve.price(q_hat))
    assert prices[-1] == pytest.approx(lc.price(ell_star), abs=1e-4)


# ---------------------------------------------------------------- corollary

def test_corollary_reference_points():
    lc = gaussian_limit_curve(1.0, 1.0)
    assert corollary_limit(lc, 0.7) == pytest.approx(0.3, abs=1e-8)
    assert corollary_limit(lc, 1.0) == pytest.approx(0.0, abs=1e-8)
    assert corollary_limit(lc, 1.6) == pytest.approx(-0.6, abs=1e-8)


def test_flat_limit_curve_has_no_unique_candidate():
    flat = default_bond_limit_curve(1.0)
    with pytest.raises(NonUniqueLimitError):
        corollary_limit(flat, 0.9)


def test_strict_concavity_classification():
    grid = np.linspace(-2, 2, 21)
    assert check_strict_concavity(gaussian_limit_curve(1.0, 1.0), grid, 1e-12)
    bond_grid = np.linspace(0.05, 0.95, 19)
    assert not check_strict_concavity(default_bond_limit_curve(1.0),
                                      bond_grid, 1e-12)
