import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from starchimera.core import ContractError, StarParams, order_parameter, PhaseState, rhs_single_star_relative
from starchimera.integrate import integrate
from starchimera.ws import (
    DomainError,
    DomainExitError,
    NonexistenceError,
    WsDrive,
    WsState,
    async_radii,
    closed_alpha_rhs,
    critical_couplings,
    fit_ws,
    fixed_point_async,
    fixed_point_sync,
    hub_coupled_ws_rhs,
    lift_coupling_to_theta,
    mobius_apply,
    mobius_derivative,
    order_parameter_ws,
    polar_rhs,
    reconstruct_phases,
    splay_angles,
    star_drive,
    sync_hypothesis_holds,
    ws_field,
    ws_order_parameter,
    ws_rhs,
)

TWO_PI = 2 * math.pi
# independent high-precision evaluations (mpmath, 30 digits)
SIGMA_B = 0.972620080215813
SIGMA_F = 2.150999017870082
PHI_C = -0.834452214151249
LAMBDA_1 = -13.54216019219
LAMBDA_2 = -0.633943433732228
ALPHA_I = complex(0.00832288352508871, -0.0269056198088392)

disk = st.builds(lambda r, a: r * cmath.exp(1j * a), st.floats(0, 0.95), st.floats(0, TWO_PI))
angle = st.floats(0, TWO_PI)


# --- Möbius maps ----------------------------------------------------------------

def test_mobius_identity_and_rotation():
    w = np.exp(1j * np.linspace(0, 6, 7))
    assert np.allclose(mobius_apply(0, 0, w), w)
    assert np.allclose(mobius_apply(0, 0.7, w), w * cmath.exp(0.7j))
    with pytest.raises(DomainError):
        mobius_apply(1.0, 0, w)


@given(disk, angle, st.lists(angle, min_size=1, max_size=8))
def test_mobius_preserves_circle(alpha, psi, th):
    out = mobius_apply(alpha, psi, np.exp(1j * np.array(th)))
    assert np.allclose(np.abs(out), 1.0, atol=1e-12)


def test_mobius_derivative_values():
    assert np.allclose(mobius_derivative(0, 0.3, np.linspace(0, 6, 5)), 1.0)
    assert mobius_derivative(0.5, 0.0, 0.0) == pytest.approx(1 / 3, abs=1e-15)
    with pytest.raises(DomainError):
        mobius_derivative(1.2, 0, 0)


@given(disk, angle, angle)
def test_mobius_derivative_matches_finite_difference(alpha, psi, theta):
    h = 1e-6
    ph = lambda t: cmath.phase(complex(mobius_apply(alpha, psi, cmath.exp(1j * t))))  # noqa: E731
    fd = math.remainder(ph(theta + h) - ph(theta - h), TWO_PI) / (2 * h)
    d = float(mobius_derivative(alpha, psi, theta))
    assert d > 0 and fd == pytest.approx(d, rel=1e-5, abs=1e-6)


# --- states, reconstruction and fitting ----------------------------------------------

def test_ws_state_contract():
    s = WsState(0.2j, 7.0, [0.0, 1.0])
    assert s.n == 2 and s.alpha == 0.2j
    with pytest.raises(ValueError):
        s.theta[0] = 3.0
    with pytest.raises(DomainError):
        WsState(1.0 + 0j, 0.0, [0.0])


def test_reconstruct_identity_and_order_parameter(rng):
    th = rng.uniform(0, TWO_PI, 5)
    assert np.allclose(reconstruct_phases(WsState(0, 0, th)), th)
    ws = WsState(0.3 - 0.2j, 1.1, rng.uniform(0, TWO_PI, 3))
    z_direct = order_parameter(PhaseState(np.zeros(1), reconstruct_phases(ws)[None, :]))
    assert abs(complex(z_direct) - complex(ws_order_parameter(ws))) < 1e-12


@given(disk, st.floats(-3, 3))
def test_fit_round_trip(alpha, psi):
    th = splay_angles(12) + np.linspace(0, 0.04, 12)
    fit = fit_ws(reconstruct_phases(WsState(alpha, psi, th)), th)
    assert abs(fit.alpha - alpha) < 1e-8
    assert abs(math.remainder(fit.psi - psi, TWO_PI)) < 1e-8


def test_order_parameter_close_to_alpha_for_uniform_theta():
    th = splay_angles(64)
    for arg in np.linspace(0, TWO_PI, 9):
        a = 0.5 * cmath.exp(1j * arg)
        for psi in (0.0, 1.3):
            assert abs(order_parameter_ws(a, psi, th) - a) < 1e-15


def test_order_parameter_special_cases(rng):
    th = rng.uniform(0, TWO_PI, 6)
    assert order_parameter_ws(0j, 0.4, th) == pytest.approx(np.mean(np.exp(1j * (0.4 + th))))
    a, psi = 0.3 + 0.4j, 0.9
    assert order_parameter_ws(a, psi, th[:1]) == pytest.approx(complex(mobius_apply(a, psi, np.exp(1j * th[0]))))


# --- drive and evolution ----------------------------------------------------------------

def test_drive_basics():
    f = WsDrive(lambda z: 0j, lambda z: 1.0)
    da, dpsi = ws_rhs(f, WsState(0.3 + 0.1j, 0.0, [0.0, 1.0]))
    assert da == pytest.approx(1j * (0.3 + 0.1j)) and dpsi == 1.0
    d0 = star_drive(StarParams(10.0, 0.0, 0.3, 4))
    assert d0.f(0.2) == 0 and d0.g(0.2 + 0.5j) == -9.0
    d = star_drive(StarParams(10.0, 0.7, 0.3, 4))
    assert isinstance(d.g(0.3 + 0.4j), float)
    with pytest.raises(ValueError):
        ws_rhs(d, WsState(0j, 0, [0.0]), closure="other")


@given(st.lists(angle, min_size=5, max_size=5), disk, angle)
def test_ws_drive_reproduces_phase_velocities(th, alpha, psi):
    """Möbius flow transports each phase with the node-space velocity."""
    p = StarParams(10.0, 0.8, 0.3, 5)
    ws = WsState(alpha, psi, th)
    da, dpsi = ws_rhs(star_drive(p), ws)
    phi = reconstruct_phases(ws)
    v_nodes = rhs_single_star_relative(p, np.r_[phi, 0.0])[:5]
    h = 1e-7
    moved = reconstruct_phases(WsState(alpha + h * da, psi + h * dpsi, th))
    back = reconstruct_phases(WsState(alpha - h * da, psi - h * dpsi, th))
    fd = np.angle(np.exp(1j * (moved - back))) / (2 * h)
    assert np.allclose(fd, v_nodes, rtol=1e-5, atol=1e-4)


def test_closed_alpha_matches_alpha_closure_and_polar(rng):
    p = StarParams(10.0, 0.8, 0.3, 4)
    for _ in range(20):
        r, eta = rng.uniform(0.05, 0.95), rng.uniform(0, TWO_PI)
        a = r * cmath.exp(1j * eta)
        da = closed_alpha_rhs(p, a)
        da2, _ = ws_rhs(star_drive(p), WsState(a, 0.0, [0.0]), closure="alpha")
        assert abs(da - da2) < 1e-12
        dr, deta = polar_rhs(p, r, eta)
        assert abs(da - (dr + 1j * r * deta) * cmath.exp(1j * eta)) < 1e-11


def test_closed_alpha_boundary_is_tangent():
    p = StarParams(10.0, 0.8, 0.3, 4)
    for eta in np.linspace(0, TWO_PI, 13):
        a = cmath.exp(1j * eta)
        # d|α|²/dt = 2 Re(conj(α) dα) vanishes on the circle
        assert abs((a.conjugate() * closed_alpha_rhs(p, a)).real) < 1e-12


def test_ws_field_domain_exit():
    p = StarParams(10.0, 3.0, 0.3, 8)
    with pytest.raises(DomainExitError):
        integrate(ws_field(p, splay_angles(8)), [0.9, 0.0, 0.0], (0.0, 200.0))
    with pytest.raises(ValueError):
        ws_field(p, splay_angles(8), closure="nope")


# --- fixed points -------------------------------------------------------------------------

def test_critical_couplings_oracle():
    sb, sf = critical_couplings(10.0, 0.3)
    assert sb == pytest.approx(SIGMA_B, abs=1e-12) and sf == pytest.approx(SIGMA_F, abs=1e-12)
    with pytest.raises(ContractError):
        critical_couplings(0.5, 0.3)


def test_sigma_b_large_beta_limit():
    sb, _ = critical_couplings(1e6, 0.3)
    assert sb * math.cos(0.6) == pytest.approx(1.0, abs=1e-5)


def test_async_fixed_point_oracle():
    fp = fixed_point_async(StarParams(10.0, 0.5, 0.3, 8))
    assert abs(fp.alpha_I - ALPHA_I) < 1e-14
    assert abs(fp.alpha_I) == pytest.approx(0.02817, abs=1e-5)
    assert cmath.phase(fp.alpha_I) == pytest.approx(-math.pi / 2 + 0.3, abs=1e-12)
    assert abs(closed_alpha_rhs(StarParams(10.0, 0.5, 0.3, 8), fp.alpha_I)) < 1e-10
    assert fp.stable and np.all(fp.eigenvalues.real < 0)
    assert abs(fixed_point_async(StarParams(10.0, 1e-6, 0.3, 8)).alpha_I) < 1e-5


def test_async_fixed_point_is_ws_rhs_stationary():
    p = StarParams(10.0, 0.5, 0.3, 8)
    a = fixed_point_async(p).alpha_I
    da, _ = ws_rhs(star_drive(p), WsState(a, 0.0, splay_angles(8)), closure="alpha")
    assert abs(da) < 1e-10


def test_async_nonexistence_and_radii():
    with pytest.raises(NonexistenceError):
        fixed_point_async(StarParams(10.0, SIGMA_F + 1e-6, 0.3, 8))
    r_m, r_p = async_radii(StarParams(10.0, 1.0, 0.3, 8))
    c = 1 + 20 * math.cos(0.6)
    # both radii solve σc r² − 2(β−1) r + σ = 0
    for r in (r_m, r_p):
        assert abs(c * r * r - 18 * r + 1) < 1e-12
    assert r_m * r_p == pytest.approx(1 / c)


def test_sync_fixed_point_oracle():
    fp = fixed_point_sync(StarParams(10.0, 1.5, 0.3, 8))
    assert fp.phi_C == pytest.approx(PHI_C, abs=1e-12)
    assert fp.eigenvalues[0] == pytest.approx(LAMBDA_1, abs=1e-10)
    assert fp.eigenvalues[1] == pytest.approx(LAMBDA_2, abs=1e-12)
    assert fp.stable and fp.multiplicity == (1, 7)


def test_sync_eigenvalues_match_numerical_jacobian():
    n = 8
    p = StarParams(10.0, 1.5, 0.3, n)
    fp = fixed_point_sync(p)
    y = np.r_[np.full(n, fp.phi_C), 0.0]
    h = 1e-6
    jac = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n + 1)
        e[j] = h
        jac[:, j] = (rhs_single_star_relative(p, y + e)[:n] - rhs_single_star_relative(p, y - e)[:n]) / (2 * h)
    ev = np.sort(np.linalg.eigvals(jac).real)
    expect = np.sort([fp.eigenvalues[0]] + [fp.eigenvalues[1]] * (n - 1))
    assert np.allclose(ev, expect, atol=1e-8)


def test_sync_stability_changes_at_sigma_b():
    above = fixed_point_sync(StarParams(10.0, SIGMA_B + 1e-4, 0.3, 8))
    assert above.stable
    below = fixed_point_sync(StarParams(10.0, SIGMA_B - 1e-4, 0.3, 8))
    assert below.eigenvalues[1] >= 0 and not below.stable
    with pytest.raises(NonexistenceError):
        fixed_point_sync(StarParams(10.0, 0.5, 0.3, 8))


def test_sync_hypothesis_agrees_with_eigenvalues():
    for beta in (2.0, 10.0, 200.0):
        for d in (0.1, 0.3, 0.6):
            sb, _ = critical_couplings(beta, d)
            for s in np.linspace(0.6 * sb, 3 * sb, 25):
                p = StarParams(beta, s, d, 4)
                try:
                    stable = fixed_point_sync(p).stable
                except NonexistenceError:
                    stable = False
                if abs(s - sb) > 1e-9:
                    assert sync_hypothesis_holds(p) == stable


# --- lifted coupling and hub reduction ---------------------------------------------------------

def test_lift_examples(rng):
    th = rng.uniform(0, TWO_PI, 6)
    ws0 = WsState(0j, 0.2, th)
    assert np.allclose(lift_coupling_to_theta(ws0, [1, 2, 3, 4, 5, 6], np.arange(6.0)), np.arange(6.0))
    assert np.array_equal(lift_coupling_to_theta(ws0, [], []), np.zeros(6))
    ws = WsState(0.4 + 0.1j, 0.2, th)
    lifted = lift_coupling_to_theta(ws, [2, 5], [0.3, -0.1])
    assert np.count_nonzero(lifted) == 2
    # the lifted θ speed pushes φ_j at exactly the node value
    assert lifted[1] * mobius_derivative(ws.alpha, ws.psi, th[1]) == pytest.approx(0.3)
    with pytest.raises(ContractError):
        lift_coupling_to_theta(ws, [7], [1.0])
    with pytest.raises(ContractError):
        lift_coupling_to_theta(ws, [1, 2], [1.0, 2.0, 3.0])


def test_hub_reduction_uncoupled_limit(rng):
    p = StarParams(10.0, 1.5, 0.3, 8)
    wp = WsState(0.3 + 0.2j, 0.4, rng.uniform(0, TWO_PI, 8))
    wm = WsState(-0.1j, 1.0, rng.uniform(0, TWO_PI, 8))
    dap, dpp, dam, dpm, dg = hub_coupled_ws_rhs(p, p, 0.0, (wp, wm, 0.7))
    assert (dap, dpp) == pytest.approx(ws_rhs(star_drive(p), wp))
    assert (dam, dpm) == pytest.approx(ws_rhs(star_drive(p), wm))
    zp, zm = order_parameter_ws(wp.alpha, wp.psi, wp.theta), order_parameter_ws(wm.alpha, wm.psi, wm.theta)
    assert dg == pytest.approx(1.5 * 10 * ((zp - zm) * cmath.exp(0.3j)).imag, abs=1e-12)


def test_hub_reduction_symmetric_state_keeps_gamma():
    p = StarParams(10.0, 1.5, 0.3, 8)
    w = WsState(0.3 + 0.2j, 0.4, splay_angles(8))
    assert hub_coupled_ws_rhs(p, p, 0.2, (w, w, 0.0))[4] == pytest.approx(0.0, abs=1e-13)
