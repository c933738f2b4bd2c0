"""Watanabe-Strogatz reduction of a star through the disk-preserving Möbius group.

Relative leaf phases are written as ``exp(iφ_j) = M_{α,ψ}(exp(iθ_j))`` with
constant angles θ and

    M_{α,ψ}(w) = (α + e^{iψ} w) / (1 + conj(α) e^{iψ} w),   |α| < 1.

Everything here works in rectangular complex form; the polar view of the
closed α-equation is provided for the averaging analysis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import least_squares

from . import _kernels
from .core import ContractError, OrderParameter, StarParams
from .integrate import VectorField

TWO_PI = 2.0 * math.pi
ALPHA_EXIT = 1.0 - 1e-9


DomainError = _kernels.DomainError
DomainExitError = _kernels.DomainExitError


class NonexistenceError(ValueError):
    """The requested fixed-point branch does not exist for these parameters."""


def _check_alpha(alpha, limit: float = 1.0) -> complex:
    a = complex(alpha)
    if not abs(a) < limit:
        raise DomainError(f"|alpha| = {abs(a)!r} is not inside the unit disk")
    return a


def mobius_apply(alpha, psi, w):
    """Apply M_{α,ψ} to points ``w`` on the unit circle."""
    a = _check_alpha(alpha)
    u = np.exp(1j * psi) * np.asarray(w, dtype=complex)
    return (a + u) / (1.0 + a.conjugate() * u)


def mobius_derivative(alpha, psi, theta):
    """dφ/dθ = (1 − |α|²) / |α + e^{i(ψ+θ)}|², always positive."""
    a = _check_alpha(alpha)
    return (1.0 - abs(a) ** 2) / np.abs(a + np.exp(1j * (psi + np.asarray(theta, dtype=float)))) ** 2


def order_parameter_ws(alpha: complex, psi: float, theta: np.ndarray) -> complex:
    u = np.exp(1j * (psi + theta))
    return complex(np.mean((alpha + u) / (1.0 + alpha.conjugate() * u)))


@dataclass(frozen=True, eq=False)
class WsState:
    alpha: complex
    psi: float
    theta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "alpha", _check_alpha(self.alpha))
        th = np.asarray(self.theta, dtype=float).ravel()
        th.setflags(write=False)
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "psi", float(self.psi))

    @property
    def n(self) -> int:
        return self.theta.size


def splay_angles(n: int, offset: float = 0.0) -> np.ndarray:
    """Uniformly distributed constants θ_j = 2πj/N + offset."""
    return TWO_PI * np.arange(n) / n + offset


def reconstruct_phases(ws: WsState) -> np.ndarray:
    """Relative leaf phases arg M_{α,ψ}(e^{iθ_j}) in [0, 2π)."""
    return np.mod(np.angle(mobius_apply(ws.alpha, ws.psi, np.exp(1j * ws.theta))), TWO_PI)


def ws_order_parameter(ws: WsState) -> OrderParameter:
    return OrderParameter(order_parameter_ws(ws.alpha, ws.psi, ws.theta))


def fit_ws(phases, theta, alpha0: complex | None = None, psi0: float | None = None) -> WsState:
    """Recover (α, ψ) from relative phases with known θ by least squares.

    Starts from α = order parameter of the phases; ψ starts at the circular
    mean of φ − θ unless given.
    """
    phi = np.asarray(phases, dtype=float)
    th = np.asarray(theta, dtype=float)
    target = np.exp(1j * phi)
    w = np.exp(1j * th)
    if alpha0 is None:
        alpha0 = complex(np.mean(target))
        if abs(alpha0) > 0.95:
            alpha0 *= 0.95 / abs(alpha0)
    if psi0 is None:
        psi0 = float(np.angle(np.mean(target * w.conj())))

    def resid(p):
        a = complex(p[0], p[1])
        u = np.exp(1j * p[2]) * w
        d = (a + u) / (1.0 + a.conjugate() * u) - target
        return np.concatenate([d.real, d.imag])

    sol = least_squares(resid, [alpha0.real, alpha0.imag, psi0], xtol=1e-15, ftol=1e-15, gtol=1e-15)
    a = complex(sol.x[0], sol.x[1])
    return WsState(a, math.remainder(sol.x[2], TWO_PI), th)


# ---------------------------------------------------------------------------
# Möbius evolution

@dataclass(frozen=True)
class WsDrive:
    """Phase equations of the form dφ_j/dt = f e^{iφ_j} + g + conj(f) e^{−iφ_j}.

    ``f(z)`` is complex and ``g(z)`` real, both functions of the order parameter.
    """

    f: Callable[[complex], complex]
    g: Callable[[complex], float]


def star_drive(params: StarParams, extra: float = 0.0) -> WsDrive:
    """Drive of the relative-phase star equations; ``extra`` is added to g."""
    sigma, beta, delta = params.sigma, params.beta, params.delta
    f0 = -sigma * np.exp(-1j * delta) / 2j
    ed = np.exp(1j * delta)

    def f(z):
        return f0

    def g(z):
        return 1.0 - beta - sigma * beta * (z * ed).imag + extra

    return WsDrive(f, g)


def ws_rhs(drive: WsDrive, ws: WsState, closure: str = "exact") -> tuple[complex, float]:
    """(dα/dt, dψ/dt) with f, g evaluated at the true z or at z = α."""
    if closure == "exact":
        z = order_parameter_ws(ws.alpha, ws.psi, ws.theta)
    elif closure == "alpha":
        z = ws.alpha
    else:
        raise ValueError(f"closure must be 'exact' or 'alpha', got {closure!r}")
    return _mobius_velocity(drive.f(z), drive.g(z), ws.alpha)


def _mobius_velocity(f: complex, g: float, a: complex) -> tuple[complex, float]:
    fb = f.conjugate()
    da = 1j * (f * a * a + g * a + fb)
    dpsi = (f * a + fb * a.conjugate()).real + g
    return complex(da), float(dpsi)


def closed_alpha_rhs(params: StarParams, alpha) -> complex:
    """α-equation with the order parameter replaced by α itself."""
    s, b, d = params.sigma, params.beta, params.delta
    a = _check_alpha(alpha, limit=1.0 + 1e-12)
    em, ep = np.exp(-1j * d), np.exp(1j * d)
    return complex(-0.5 * s * (em + b * ep) * a * a + 1j * (1 - b) * a
                   + 0.5 * s * (b * abs(a) ** 2 * em + ep))


def polar_rhs(params: StarParams, r: float, eta: float) -> tuple[float, float]:
    """Closed α-equation in polar coordinates α = r e^{iη}."""
    s, b, d = params.sigma, params.beta, params.delta
    dr = 0.5 * s * (1 - r * r) * math.cos(eta - d)
    deta = 1 - b - s * b * r * math.sin(eta + d) - 0.5 * s * (1 + r * r) / r * math.sin(eta - d)
    return dr, deta


def ws_field(params: StarParams, theta, closure: str = "exact") -> VectorField:
    """Compiled field on ``(Re α, Im α, ψ)`` for integration; θ held fixed.

    Integration raises :class:`DomainExitError` once |α| reaches 1 − 1e-9.
    """
    if closure not in ("exact", "alpha"):
        raise ValueError(f"closure must be 'exact' or 'alpha', got {closure!r}")
    th = np.ascontiguousarray(theta, dtype=float)
    args = (float(params.beta), float(params.sigma), float(params.delta), th,
            0 if closure == "exact" else 1, ALPHA_EXIT)
    return VectorField(_kernels.ws_star, args, 3)


# ---------------------------------------------------------------------------
# fixed points and critical couplings

def critical_couplings(beta: float, delta: float) -> tuple[float, float]:
    """Backward and forward critical couplings (σ_b, σ_f) of a single star."""
    if not beta > 1 or not 0 < delta < math.pi / 4:
        raise ContractError("need beta > 1 and 0 < delta < pi/4")
    c2 = math.cos(2 * delta)
    return (beta - 1) / (1 + beta * c2), (beta - 1) / math.sqrt(1 + 2 * beta * c2)


@dataclass(frozen=True)
class AsyncFixedPoint:
    alpha_I: complex
    r_minus: float
    r_plus: float
    jacobian: np.ndarray
    stable: bool

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.jacobian)


def async_radii(params: StarParams) -> tuple[float, float]:
    b, s, d = params.beta, params.sigma, params.delta
    c = 1 + 2 * b * math.cos(2 * d)
    disc = (b - 1) ** 2 - s * s * c
    if not s > 0 or disc < 0:
        raise NonexistenceError(f"incoherent branch needs 0 < sigma < sigma_f (sigma = {s})")
    root = math.sqrt(disc)
    # small root rationalized to avoid cancellation
    return s / ((b - 1) + root), ((b - 1) + root) / (s * c)


def fixed_point_async(params: StarParams) -> AsyncFixedPoint:
    """Attracting incoherent fixed point α^I of the closed α-equation."""
    _, sigma_f = critical_couplings(params.beta, params.delta)
    if not params.sigma < sigma_f:
        raise NonexistenceError(f"sigma = {params.sigma} is not below sigma_f = {sigma_f}")
    r_m, r_p = async_radii(params)
    b, s, d = params.beta, params.sigma, params.delta
    a = 0.5 * s * (1 + 2 * b * math.cos(2 * d) - 1 / r_m ** 2)
    jac = np.array([[0.0, 0.5 * s * (1 - r_m ** 2)],
                    [a, -b * s * r_m * math.sin(2 * d)]])
    stable = bool(np.trace(jac) < 0 and np.linalg.det(jac) > 0)
    alpha_I = r_m * complex(math.cos(d - math.pi / 2), math.sin(d - math.pi / 2))
    return AsyncFixedPoint(alpha_I, r_m, r_p, jac, stable)


@dataclass(frozen=True)
class SyncFixedPoint:
    phi_C: float
    eigenvalues: tuple[float, float]
    stable: bool
    n_leaves: int
    v: np.ndarray
    w: np.ndarray

    @property
    def multiplicity(self) -> tuple[int, int]:
        """Multiplicities of (λ1, λ2); the hub direction adds one zero eigenvalue."""
        return 1, self.n_leaves - 1


def fixed_point_sync(params: StarParams) -> SyncFixedPoint:
    """Phase-locked state φ_1 = … = φ_N = φ^C and its transverse spectrum."""
    b, s, d = params.beta, params.sigma, params.delta
    v = np.array([b * math.sin(2 * d), 1 + b * math.cos(2 * d)])
    w = np.array([v[1], -v[0]])
    nv = math.hypot(*v)
    if not s * nv >= b - 1:
        raise NonexistenceError(f"no phase-locked state: sigma*|v| = {s * nv} < beta - 1")
    phi = d - math.pi + math.atan(v[1] / v[0]) + math.acos((b - 1) / (s * nv))
    phi = math.remainder(phi, TWO_PI)
    lam1 = -s * (math.cos(phi - d) + b * math.cos(phi + d))
    lam2 = -s * math.cos(phi - d)
    return SyncFixedPoint(phi, (lam1, lam2), bool(lam1 < 0 and lam2 < 0), params.n_leaves, v, w)


def sync_hypothesis_holds(params: StarParams) -> bool:
    """Closed-form stability conditions on σ and arg(v) for the locked state."""
    b, s, d = params.beta, params.sigma, params.delta
    sigma_b, _ = critical_couplings(b, d)
    v = np.array([b * math.sin(2 * d), 1 + b * math.cos(2 * d)])
    nv = math.hypot(*v)
    x = (1 - b) / (s * nv)
    if not -1 <= x <= 1:
        return False
    # arg(v) measured from the second coordinate axis; the first-axis reading
    # disagrees with the eigenvalue signs
    ang = math.atan2(v[0], v[1]) - math.asin(x)
    return s > sigma_b and -math.pi / 2 < ang < math.pi / 2


# ---------------------------------------------------------------------------
# lifted perturbations

def lift_coupling_to_theta(ws: WsState, coupled_indices: Sequence[int], node_values) -> np.ndarray:
    """dθ/dt that reproduces node-space forcing on leaves in ``coupled_indices``.

    Indices are 1-based leaf labels.  ``node_values`` holds one value per
    coupled index (in the given order) or one per leaf.  α and ψ receive no
    contribution from this lift.
    """
    idx = np.asarray(list(coupled_indices), dtype=np.int64)
    out = np.zeros(ws.n)
    if idx.size == 0:
        return out
    if idx.min() < 1 or idx.max() > ws.n:
        raise ContractError(f"indices must lie in 1..{ws.n}")
    vals = np.asarray(node_values, dtype=float)
    if vals.shape == (ws.n,):
        vals = vals[idx - 1]
    elif vals.shape != (idx.size,):
        raise ContractError("need one coupling value per coupled index or per leaf")
    th = ws.theta[idx - 1]
    out[idx - 1] = vals / mobius_derivative(ws.alpha, ws.psi, th)
    return out


def hub_coupled_ws_rhs(plus: StarParams, minus: StarParams, epsilon: float,
                       state: tuple[WsState, WsState, float],
                       coupling_delta: float | None = None):
    """Reduced dynamics of two stars coupled only through their hubs.

    Returns ``(dα+, dψ+, dα-, dψ-, dΓ)`` where Γ = φ_0^+ − φ_0^-.  The hub
    coupling is ε sin(φ_0^∓ − φ_0^± + δ); relative leaf phases feel it with
    the opposite sign, so g± receives −ε sin(∓Γ + δ).
    """
    wp, wm, gamma = state
    dc = plus.delta if coupling_delta is None else coupling_delta
    fp = epsilon * math.sin(-gamma + dc)
    fm = epsilon * math.sin(gamma + dc)
    zp = order_parameter_ws(wp.alpha, wp.psi, wp.theta)
    zm = order_parameter_ws(wm.alpha, wm.psi, wm.theta)
    dp = star_drive(plus, extra=-fp)
    dm = star_drive(minus, extra=-fm)
    dap, dpp = _mobius_velocity(dp.f(zp), dp.g(zp), wp.alpha)
    dam, dpm = _mobius_velocity(dm.f(zm), dm.g(zm), wm.alpha)
    dgamma = (plus.beta - minus.beta
              + plus.sigma * plus.beta * (zp * np.exp(1j * plus.delta)).imag
              - minus.sigma * minus.beta * (zm * np.exp(1j * minus.delta)).imag
              + fp - fm)
    return dap, dpp, dam, dpm, float(dgamma)


def hub_coupled_ws_field(plus: StarParams, minus: StarParams, epsilon: float,
                         theta_plus, theta_minus, coupling_delta: float | None = None) -> VectorField:
    """Compiled field on ``(Re α+, Im α+, ψ+, Re α-, Im α-, ψ-, Γ)``."""
    dc = plus.delta if coupling_delta is None else coupling_delta
    args = (float(plus.beta), float(plus.sigma), float(plus.delta),
            float(minus.beta), float(minus.sigma), float(minus.delta), float(epsilon), float(dc),
            np.ascontiguousarray(theta_plus, dtype=float), np.ascontiguousarray(theta_minus, dtype=float),
            ALPHA_EXIT)
    return VectorField(_kernels.ws_hub_coupled, args, 7)
