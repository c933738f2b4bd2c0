import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from starchimera._kernels import slow_fast_polar
from starchimera.averaging import (
    RegimeWarning,
    _averaged_by_quadrature,
    averaged_field,
    compare_averaged,
    fit_series_coefficients,
    p_function,
    p_series,
    q_function,
    r_function,
    series_coefficients,
    slow_fast_rhs,
)
from starchimera.core import ContractError, StarParams
from starchimera.integrate import IntegratorConfig, VectorField, integrate
from starchimera.ws import fixed_point_async, polar_rhs

# closed forms: Q = 1/√(1−x²), P = 2(1−√(1−x²))/(x√(1−x²)); frozen at 15 digits with mpmath
PQR = {
    0.5: (0.618802153517006, 1.15470053837925, 0.535898384862245),
    0.1: (0.100756305184242, 1.00503781525921, 0.100251257867601),
    -0.7: (-1.14365738293717, 1.40028008402801, -0.816734734702043),
}
SLOPE_05_03 = -0.0352901545871897


@pytest.mark.parametrize("x", sorted(PQR))
def test_pqr_oracle(x):
    p, q, r = PQR[x]
    assert p_function(x) == pytest.approx(p, abs=1e-13)
    assert q_function(x) == pytest.approx(q, abs=1e-13)
    assert r_function(x) == pytest.approx(r, abs=1e-13)


def test_pqr_at_zero_and_domain():
    assert (p_function(0.0), q_function(0.0), r_function(0.0)) == (0.0, 1.0, 0.0)
    for bad in (1.0, -1.0, 1.5):
        with pytest.raises(ContractError):
            p_function(bad)
        with pytest.raises(ContractError):
            q_function(bad)


def test_series_matches_quadrature():
    assert series_coefficients(3) == pytest.approx((1.0, 0.75, 0.625))
    x = 0.1
    truncated = x + 0.75 * x ** 3 + 0.625 * x ** 5
    assert abs(p_function(x) - truncated) < 1e-7
    assert abs(p_function(0.4) - p_series(0.4)) < 1e-12
    with pytest.raises(ContractError):
        p_series(0.6)


def test_series_coefficients_from_fit():
    assert np.allclose(fit_series_coefficients(3), [1.0, 0.75, 0.625], atol=1e-6)


def test_r_derivative_at_zero():
    h = 1e-4
    assert (r_function(h) - r_function(-h)) / (2 * h) == pytest.approx(1.0, abs=1e-6)


def test_identity_q_from_p():
    for x in np.linspace(-0.9, 0.9, 37):
        assert abs(q_function(x) - 1 - 0.5 * x * p_function(x)) < 1e-10


@given(st.floats(-0.95, 0.95))
def test_p_odd(x):
    assert p_function(-x) == pytest.approx(-p_function(x), abs=1e-13)


def test_p_increasing():
    xs = np.linspace(0, 0.95, 60)
    assert np.all(np.diff([p_function(x) for x in xs]) > 0)


# --- averaged field -----------------------------------------------------------------

def test_averaged_field_basics():
    f1 = averaged_field(StarParams(10.0, 0.5, 0.3, 8))
    assert f1(0.0) == 0.0
    rho = np.linspace(0, f1.domain[1], 101)[1:]
    assert np.all(f1(rho) < 0)
    assert f1.slope_at_zero == pytest.approx(SLOPE_05_03, abs=1e-15)
    h = 1e-5
    assert (f1(h) - f1(-h)) / (2 * h) == pytest.approx(SLOPE_05_03, abs=1e-6)


def test_averaged_field_regime_warning():
    with pytest.warns(RegimeWarning):
        f1 = averaged_field(StarParams(10.0, 1.2, 0.3, 8))
    assert math.isfinite(f1(0.5))
    with pytest.raises(ContractError):
        averaged_field(StarParams(10.0, 0.5, 0.3, 8), delta0=1.0)


@pytest.mark.parametrize("rho", [0.05, 0.3, 0.7, 0.9])
def test_closed_form_matches_turn_average(rho):
    p = StarParams(10.0, 0.6, 0.3, 8)
    assert averaged_field(p)(rho) == pytest.approx(_averaged_by_quadrature(p, rho), abs=1e-12)


# --- slow-fast system ---------------------------------------------------------------------

def test_slow_fast_is_rescaled_polar(rng):
    for _ in range(50):
        beta = rng.uniform(5, 300)
        p = StarParams(beta, rng.uniform(0.05, 2.0), rng.uniform(0.05, 0.7), 4)
        r, eta = rng.uniform(0.01, 0.99), rng.uniform(0, 2 * math.pi)
        a = slow_fast_rhs(p, (r, eta))
        b = polar_rhs(p, r, eta)
        assert a[0] == pytest.approx(b[0] / beta, abs=1e-12)
        assert a[1] == pytest.approx(b[1] / beta, abs=1e-12)


def test_slow_fast_limit_and_domain():
    p = StarParams(1e12, 0.5, 0.3, 4)
    r, eta = 0.4, 1.1
    assert slow_fast_rhs(p, (r, eta))[1] == pytest.approx(-1 - 0.5 * r * math.sin(eta + 0.3), abs=1e-10)
    for bad in (0.0, 1.0, -0.2):
        with pytest.raises(ContractError):
            slow_fast_rhs(p, (bad, 0.0))


def test_fast_angle_bounded_away_from_zero():
    for beta in (20.0, 200.0):
        p = StarParams(beta, 0.5, 0.3, 4)
        for r in np.linspace(0.1, 0.95, 18):
            for eta in np.linspace(0, 2 * math.pi, 41):
                bound = 1 - 0.5 * r - 1 / beta - 0.5 * (1 + r * r) / (2 * beta * r)
                assert abs(slow_fast_rhs(p, (r, eta))[1]) >= bound - 1e-12


def test_compare_averaged_trivial_and_errors():
    p = StarParams(50.0, 0.5, 0.3, 4)
    assert compare_averaged(p, 0.0, 100.0) == (0.0, 0.0)
    with pytest.raises(ContractError):
        compare_averaged(p, 1.2, 100.0)


def test_averaged_tail_is_exponential_with_linear_rate():
    p = StarParams(50.0, 0.5, 0.3, 4)
    f1 = averaged_field(p)
    eps = 1 / p.beta
    tau = 20 * p.beta / abs(f1.slope_at_zero)
    rec = integrate(lambda t, y: np.array([eps * f1(y[0])]), [0.3], (0.0, tau), IntegratorConfig(1e-10, 1e-14),
                    t_eval=np.linspace(0, tau, 201), record_states=True)
    rho = rec.states[:, 0]
    assert np.all(np.diff(rho) < 0)
    tail = slice(120, None)
    rate = np.polyfit(rec.times[tail], np.log(rho[tail]), 1)[0]
    assert rate == pytest.approx(eps * f1.slope_at_zero, rel=0.1)


def test_true_radius_settles_near_incoherent_state():
    p = StarParams(50.0, 0.5, 0.3, 4)
    _, c = compare_averaged(p, 0.3, 10 * p.beta)
    r_minus = abs(fixed_point_async(p).alpha_I)
    horizon = 15 * p.beta / abs(averaged_field(p).slope_at_zero)
    grid = np.linspace(0, horizon, 4001)
    rec = integrate(VectorField(slow_fast_polar, (p.beta, p.sigma, p.delta), 2), [0.3, 0.0], (0.0, horizon),
                    IntegratorConfig(1e-10, 1e-12), t_eval=grid, record_states=True)
    r = rec.states[:, 0]
    inside = np.abs(r - r_minus) <= r_minus + c / p.beta
    # enters the ball and never leaves it again within the first half of the run
    last_outside = np.nonzero(~inside)[0]
    assert last_outside.size == 0 or last_outside[-1] < grid.size // 2
