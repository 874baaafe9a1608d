"""Kernel-level tests: golden-section search, RK4, quadrature, x*exp(x),
and the curvature-response table."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from indiff.errors import DomainError, OdeBlowUpError, STableError, UnboundedObjectiveError
from indiff.numerics import (
    amplified_curvature,
    amplified_curvature_slope,
    build_s_table,
    eval_s,
    gauss_hermite_expectation,
    minimize_unimodal,
    rk4_integrate,
    s_ode_residuals,
    solve_x_exp_x,
)


# ---------------------------------------------------------------- minimise

@settings(max_examples=60, deadline=None)
@given(
    centre=st.floats(-30.0, 30.0),
    scale=st.floats(0.01, 50.0),
    power=st.sampled_from([2.0, 4.0]),
)
def test_minimize_matches_grid_scan(centre, scale, power):
    f = lambda x: scale * abs(x - centre) ** power
    tol = 1e-6
    x, fx = minimize_unimodal(f, (-1.0, 1.0), tol=tol)
    grid = np.linspace(centre - 2.0, centre + 2.0, 100_001)
    g = grid[np.argmin(f(grid))]
    assert abs(x - g) <= 2.0 * tol + (grid[1] - grid[0])
    assert fx <= f(g) + 1e-12 * (1.0 + abs(f(g)))


def test_minimize_nonsymmetric_unimodal():
    f = lambda x: math.exp(x) - 2.0 * x  # minimum at ln 2
    x, _ = minimize_unimodal(f, (10.0, 11.0), tol=1e-10)
    assert abs(x - math.log(2.0)) < 1e-8


def test_minimize_unbounded_objective_raises():
    with pytest.raises(UnboundedObjectiveError):
        minimize_unimodal(lambda x: x, (0.0, 1.0), tol=1e-8)


def test_minimize_rejects_bad_bracket():
    with pytest.raises(DomainError):
        minimize_unimodal(lambda x: x * x, (1.0, 1.0))
    with pytest.raises(DomainError):
        minimize_unimodal(lambda x: x * x, (0.0, 1.0), tol=0.0)


# ---------------------------------------------------------------- RK4

def test_rk4_empirical_order_at_least_3_8():
    f = lambda t, y: math.cos(t) * y  # y(t) = exp(sin t)
    exact = math.exp(math.sin(1.0))
    errs = []
    for steps in (20, 40, 80):
        errs.append(abs(rk4_integrate(f, 0.0, 1.0, 1.0, steps) - exact))
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert min(orders) >= 3.8


def test_rk4_runs_backward():
    # integrate y' = y backward from t=1, y(1)=e: expect y(0)=1
    y0 = rk4_integrate(lambda t, y: y, 1.0, 0.0, math.e, 200)
    assert abs(y0 - 1.0) < 1e-10


def test_rk4_vector_state():
    # harmonic oscillator, one full period
    f = lambda t, y: np.array([y[1], -y[0]])
    y = rk4_integrate(f, 0.0, 2.0 * math.pi, np.array([1.0, 0.0]), 400)
    assert np.allclose(y, [1.0, 0.0], atol=1e-7)

def test_rk4_blowup_raises():
    with pytest.raises(OdeBlowUpError):
        rk4_integrate(lambda t, y: y * y, 0.0, 10.0, 1.0, 50)


# ---------------------------------------------------------------- quadrature

def test_gauss_hermite_exact_on_polynomials():
    # degree-11 polynomial with order 6: below the 2*order exactness bound
    mean, var = 0.7, 2.3
    got = gauss_hermite_expectation(lambda x: x**11, mean, var, order=6)
    # E[X^11] via moments of Normal(mean, var), computed from the MGF
    from math import comb

    def central(k):  # E[(X-mean)^k]
        if k % 2:
            return 0.0
        return var ** (k // 2) * math.prod(range(1, k, 2))

    exact = sum(comb(11, k) * mean ** (11 - k) * central(k) for k in range(12))
    assert abs(got - exact) <= 1e-9 * abs(exact)


def test_gauss_hermite_lognormal_mean():
    got = gauss_hermite_expectation(np.exp, 0.1, 0.04, order=40)
    assert abs(got - math.exp(0.1 + 0.02)) < 1e-12


def test_gauss_hermite_degenerate_and_domain():
    assert gauss_hermite_expectation(lambda x: x * x, 3.0, 0.0, order=8) == 9.0
    with pytest.raises(DomainError):
        gauss_hermite_expectation(np.exp, 0.0, -1.0, order=8)
    with pytest.raises(DomainError):
        gauss_hermite_expectation(np.exp, 0.0, 1.0, order=1)


# ---------------------------------------------------------------- x exp(x)

def test_solve_x_exp_x_residuals():
    tol = 1e-12
    for c in (0.0, 1e-6, 1.0, 10.0, 1e6):
        x = solve_x_exp_x(c, tol=tol)
        assert x >= 0.0
        assert abs(x * math.exp(x) - c) <= tol * (1.0 + c)


def test_solve_x_exp_x_known_roots():
    # bisection oracle digits; c=1 is the Omega constant, c=e gives exactly 1
    assert abs(solve_x_exp_x(10.0) - 1.745528002740699) < 1e-12
    assert abs(solve_x_exp_x(1.0) - 0.567143290409784) < 1e-13
    assert abs(solve_x_exp_x(math.e) - 1.0) < 1e-13


def test_solve_x_exp_x_domain():
    with pytest.raises(DomainError):
        solve_x_exp_x(-0.5)
    with pytest.raises(DomainError):
        solve_x_exp_x(math.inf)


# ---------------------------------------------------------------- S table

@pytest.fixture(scope="module")
def table():
    return build_s_table()


def test_s_table_origin_and_monotone(table):
    i0 = np.searchsorted(table.a_nodes, 0.0)
    assert table.a_nodes[i0] == 0.0
    assert table.s_values[i0] == 0.0
    assert eval_s(table, 0.0) == 0.0
    assert np.all(np.diff(table.s_values) > 0.0)


def test_s_table_range_and_tails(table):
    a = np.concatenate([-np.logspace(-6, 4, 200), np.logspace(-6, 4, 200)])
    s = eval_s(table, a)
    assert np.all(s > -1.0)
    assert np.all(np.isfinite(s))
    # ordering preserved on a sorted sweep across both tails
    sweep = np.linspace(-5000.0, 5000.0, 20_001)
    assert np.all(np.diff(eval_s(table, sweep)) > 0.0)
    # right tail behaves like A, left tail flattens toward -1
    assert abs(eval_s(table, 1e6) / 1e6 - 1.0) < 1e-4
    assert abs(eval_s(table, -1e6) + 1.0) < 1e-5


def test_s_table_positive_for_positive_argument(table):
    a = np.logspace(-8, np.log10(49.0), 100)
    assert np.all(eval_s(table, a) > 0.0)


def test_s_table_ode_residual_bound(table):
    resid = s_ode_residuals(table)
    assert resid.size > 3000
    assert float(np.max(np.abs(resid))) <= 1e-6
    assert table.max_ode_residual <= 1e-6


def test_s_table_seed_is_the_distinguished_branch():
    # Residual of the analytic two-term seed stays bounded as A -> 0, while
    # perturbing either coefficient makes it diverge like a power of A.
    k1 = 1.5 ** (2.0 / 3.0)
    k2 = 1.2 * (0.5 * math.sqrt(k1) + 0.25 / k1)

    def seed_resid(a, kk1, kk2):
        u = a ** (1.0 / 3.0)
        s = kk1 * u + kk2 * u * u
        ds = kk1 / (3.0 * u * u) + 2.0 * kk2 / (3.0 * u)
        return abs(ds - (1.0 + s) / (2.0 * math.sqrt(a * s) - a))

    good = [seed_resid(a, k1, k2) for a in (1e-8, 1e-10, 1e-12)]
    assert max(good) < 1.0
    bad_k1 = [seed_resid(a, 1.001 * k1, k2) for a in (1e-8, 1e-10, 1e-12)]
    assert bad_k1[2] > 100.0 * bad_k1[0] > 0.0
    bad_k2 = [seed_resid(a, k1, 1.1 * k2) for a in (1e-8, 1e-10, 1e-12)]
    assert bad_k2[2] > 10.0 * bad_k2[0] > 0.0


def test_s_table_amplified_curvature_increasing(table):
    # strictly increasing inside the table; weakly so in the left tail,
    # where the map flattens onto its horizontal asymptote
    a = np.linspace(-200.0, 200.0, 4001)
    theta = amplified_curvature(table, a)
    assert np.all(np.diff(theta) >= -1e-12)
    a_in = np.linspace(-49.0, 49.0, 4001)
    assert np.all(np.diff(amplified_curvature(table, a_in)) > 0.0)
    slope = amplified_curvature_slope(table, a)
    assert np.all(slope >= 0.0)
    assert amplified_curvature_slope(table, 0.0) == pytest.approx(1.0, abs=1e-6)
    # slope consistent with differences of the map itself
    mid = 0.5 * (a[1:] + a[:-1])
    fd = np.diff(theta) / np.diff(a)
    assert np.max(np.abs(fd - amplified_curvature_slope(table, mid))) < 5e-2


def test_s_table_custom_ranges():
    for args in ((-50.0, 50.0, 201), (-10.0, 50.0, 1001), (-1.0, 1.0, 401)):
        t = build_s_table(*args)
        assert np.all(np.diff(t.s_values) > 0.0)
        assert float(np.max(np.abs(s_ode_residuals(t)))) <= 1e-6


def test_s_table_rejects_bad_inputs():
    with pytest.raises(DomainError):
        build_s_table(1.0, 50.0)
    with pytest.raises(DomainError):
        build_s_table(-50.0, 50.0, 100)
