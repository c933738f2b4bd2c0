"""Slow-fast averaging of the closed α-equation for large β.

In the slow time τ = βt and with ε = 1/β the polar form reads

    r' = ε F(r, η),       F  = (σ/2)(1 − r²) cos(η − δ)
    η' = −1 − σ r sin(η + δ) + ε G1(r, η),   G1 = 1 − (σ/2)(1 + r²)/r sin(η − δ)

and the radial motion averaged over the fast angle is ρ' = ε F1(ρ) with
F1(ρ) = −(sin 2δ / 4) σ (1 − ρ²) R(σρ), R = P/Q.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._kernels import slow_fast_polar
from .core import ContractError, StarParams
from .integrate import IntegratorConfig, VectorField, integrate, as_field

QUAD_TOL = 1e-12
SERIES_TERMS = 25


class RegimeWarning(UserWarning):
    """Parameters lie outside the regime where the averaged picture is derived."""


def _check_x(x: float) -> float:
    x = float(x)
    if not abs(x) < 1.0:
        raise ContractError(f"|x| = {abs(x)} must be < 1 (integrand is singular)")
    return x


def _periodic_trapezoid(fn, tol: float = QUAD_TOL, m0: int = 16, m_max: int = 1 << 20) -> float:
    # mean of a smooth 2π-periodic function; doubling reuses previous nodes
    m = m0
    total = float(np.sum(fn(2 * np.pi * np.arange(m) / m)))
    prev = total / m
    while m < m_max:
        mid = 2 * np.pi * (np.arange(m) + 0.5) / m
        total += float(np.sum(fn(mid)))
        m *= 2
        cur = total / m
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return cur
        prev = cur
    return prev


def p_function(x: float) -> float:
    """P(x) = −(1/π) ∫ sin ϑ / (1 + x sin ϑ) dϑ over one period."""
    x = _check_x(x)
    if x == 0.0:
        return 0.0
    return -2.0 * _periodic_trapezoid(lambda t: np.sin(t) / (1.0 + x * np.sin(t)))


def q_function(x: float) -> float:
    """Q(x) = (1/2π) ∫ 1 / (1 + x sin ϑ) dϑ over one period."""
    x = _check_x(x)
    return _periodic_trapezoid(lambda t: 1.0 / (1.0 + x * np.sin(t)))


def r_function(x: float) -> float:
    return p_function(x) / q_function(x)


@lru_cache(maxsize=None)
def series_coefficients(n_terms: int = SERIES_TERMS) -> tuple[float, ...]:
    """Coefficients a_2k = (1/π)∫ sin^{2k} for k = 1..n_terms (1, 3/4, 5/8, ...)."""
    out = []
    a = 1.0
    for k in range(1, n_terms + 1):
        out.append(a)
        # ratio of successive central binomial terms
        a *= (2 * k + 1) / (2 * k + 2)
    return tuple(out)


def p_series(x: float, n_terms: int = SERIES_TERMS) -> float:
    """Truncated odd power series P(x) = Σ a_2k x^{2k−1}; intended for |x| ≤ 0.5."""
    x = float(x)
    if abs(x) > 0.5:
        raise ContractError("series fallback is only used for |x| <= 0.5")
    c = series_coefficients(n_terms)
    x2 = x * x
    acc = 0.0
    for a in reversed(c):
        acc = acc * x2 + a
    return acc * x


def fit_series_coefficients(n_terms: int = 3, x_max: float = 0.3, degree: int = 14,
                            samples: int = 61) -> np.ndarray:
    """Least-squares fit of P(x)/x in powers of x² from quadrature samples."""
    xs = np.linspace(-x_max, x_max, samples)
    xs = xs[xs != 0.0]
    ys = np.array([p_function(x) / x for x in xs])
    basis = np.vander(xs * xs, degree + 1, increasing=True)
    coef, *_ = np.linalg.lstsq(basis, ys, rcond=None)
    return coef[:n_terms]


@dataclass(frozen=True)
class AveragedField:
    sigma: float
    delta: float
    delta0: float = 0.05

    def __call__(self, rho):
        rho = np.asarray(rho, dtype=float)
        if rho.ndim == 0:
            return self._eval(float(rho))
        return np.array([self._eval(float(r)) for r in rho.ravel()]).reshape(rho.shape)

    def _eval(self, rho: float) -> float:
        return -0.25 * math.sin(2 * self.delta) * self.sigma * (1 - rho * rho) * r_function(self.sigma * rho)

    @property
    def domain(self) -> tuple[float, float]:
        return 0.0, 1.0 - self.delta0

    @property
    def slope_at_zero(self) -> float:
        """dF1/dρ at 0 (R'(0) = 1)."""
        return -0.25 * self.sigma ** 2 * math.sin(2 * self.delta)


def averaged_field(params: StarParams, delta0: float = 0.05) -> AveragedField:
    if not 0 < delta0 < 1:
        raise ContractError("delta0 must lie in (0, 1)")
    if not params.sigma < 1:
        warnings.warn(f"sigma = {params.sigma} >= 1: averaged field derived for sigma < 1",
                      RegimeWarning, stacklevel=2)
    return AveragedField(params.sigma, params.delta, delta0)


def slow_fast_rhs(params: StarParams, state) -> tuple[float, float]:
    """(dr/dτ, dη/dτ) of the polar system in slow time."""
    r, eta = float(state[0]), float(state[1])
    if not 0 < r < 1:
        raise ContractError(f"r = {r} must lie in (0, 1)")
    out = slow_fast_polar(0.0, np.array([r, eta]), (params.beta, params.sigma, params.delta))
    return float(out[0]), float(out[1])


def _averaged_by_quadrature(params: StarParams, rho: float) -> float:
    """F1 from the fast-angle parametrization dr/dη = εF/η' averaged over a turn.

    Each turn takes ∮ dη/|η'_0| and changes r by ε∮ F/|η'_0| dη, so the
    averaged rate is the ratio (divided by ε).  Validates the closed form.
    """
    s, d = params.sigma, params.delta

    def weight(eta):
        return 1.0 / (1.0 + s * rho * np.sin(eta + d))

    num = _periodic_trapezoid(lambda e: 0.5 * s * (1 - rho * rho) * np.cos(e - d) * weight(e))
    den = _periodic_trapezoid(weight)
    return num / den


def compare_averaged(params: StarParams, r0: float, horizon: float, eta0: float = 0.0,
                     config: IntegratorConfig | None = None, samples: int = 4001) -> tuple[float, float]:
    """Sup-norm distance between true r(τ) and averaged ρ(τ) on [0, horizon].

    ``horizon`` is in slow time τ.  Returns ``(error, β·error)``.
    """
    if r0 == 0.0:
        return 0.0, 0.0
    if not 0 < r0 < 1:
        raise ContractError("r0 must lie in (0, 1)")
    cfg = config or IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12)
    grid = np.linspace(0.0, horizon, samples)
    true = integrate(VectorField(slow_fast_polar, (params.beta, params.sigma, params.delta), 2),
                     [r0, eta0], (0.0, horizon), cfg, t_eval=grid, record_states=True)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        f1 = averaged_field(params)
    eps = 1.0 / params.beta
    avg = integrate(as_field(lambda t, y: np.array([eps * f1._eval(y[0])])),
                    [r0], (0.0, horizon), cfg, t_eval=grid, record_states=True)
    err = float(np.max(np.abs(true.states[:, 0] - avg.states[:, 0])))
    return err, params.beta * err
