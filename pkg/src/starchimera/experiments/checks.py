"""Consistency checks shared by the command line, the self-test and the test suite."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..averaging import p_function, q_function
from ..core import CouplingSpec, StarParams, coupled_stars_field, single_star_field, star_order_parameter
from ..integrate import IntegratorConfig, integrate
from ..ws import (
    WsState,
    closed_alpha_rhs,
    critical_couplings,
    fixed_point_async,
    fixed_point_sync,
    hub_coupled_ws_field,
    mobius_apply,
    order_parameter_ws,
    reconstruct_phases,
    splay_angles,
    ws_field,
)
from .rng import stream

TWO_PI = 2.0 * math.pi
TIGHT = IntegratorConfig(rel_tol=1e-11, abs_tol=1e-13)


def sync_residual(params: StarParams, phi: float) -> float:
    """Velocity of a common relative leaf phase φ (zero at the locked state)."""
    b, s, d = params.beta, params.sigma, params.delta
    return 1 - b - s * math.sin(phi - d) - b * s * math.sin(phi + d)


def fixed_point_residuals(deltas=(0.1, 0.3, 0.6), n_beta: int = 20, n_sigma: int = 20) -> dict[str, float]:
    """Worst residuals of φ^C and α^I over a (β, σ) grid inside each existence region."""
    worst_sync = worst_async = 0.0
    for d in deltas:
        for b in np.geomspace(2.0, 200.0, n_beta):
            c2 = math.cos(2 * d)
            s_exist = (b - 1) / math.sqrt(1 + b * b + 2 * b * c2)
            _, s_f = critical_couplings(b, d)
            for s in np.linspace(s_exist * 1.0001, 4.0 * s_exist, n_sigma):
                p = StarParams(b, s, d, 8)
                worst_sync = max(worst_sync, abs(sync_residual(p, fixed_point_sync(p).phi_C)))
            for s in np.linspace(s_f * 0.01, s_f * 0.9999, n_sigma):
                p = StarParams(b, s, d, 8)
                worst_async = max(worst_async, abs(closed_alpha_rhs(p, fixed_point_async(p).alpha_I)))
    return {"sync": worst_sync, "async": worst_async}


def mobius_group_error(seed: int = 0, trials: int = 50) -> float:
    """Composition of two Möbius maps is again one (fitted parameters reproduce it)."""
    rng = stream(seed, "mobius-group")
    w = np.exp(1j * rng.uniform(0, TWO_PI, 16))
    worst = 0.0
    for _ in range(trials):
        a1, a2 = (0.9 * math.sqrt(rng.uniform()) * np.exp(1j * rng.uniform(0, TWO_PI)) for _ in range(2))
        p1, p2 = rng.uniform(0, TWO_PI, 2)
        comp = mobius_apply(a2, p2, mobius_apply(a1, p1, w))
        # composite in closed form: A = (α2 + u2 α1)/D, e^{iΨ} = u1 (α2 conj(α1) + u2)/D
        u1, u2 = np.exp(1j * p1), np.exp(1j * p2)
        den = 1 + a2.conjugate() * u2 * a1
        A = (a2 + u2 * a1) / den
        E = u1 * (a2 * a1.conjugate() + u2) / den
        if abs(A) >= 1:
            return math.inf
        worst = max(worst, float(np.max(np.abs(comp - mobius_apply(A, np.angle(E), w)))), abs(abs(E) - 1))
    return worst


def pq_identity_error(n: int = 181, x_max: float = 0.9) -> float:
    xs = np.linspace(-x_max, x_max, n)
    return float(max(abs(q_function(x) - 1 - 0.5 * x * p_function(x)) for x in xs))


@dataclass
class EquivalenceResult:
    n_leaves: int
    draw: int
    sup_error: float


def ws_equivalence(n_leaves: int, draw: int, *, params: StarParams | None = None, t_end: float = 10.0,
                   samples: int = 201, seed: int = 0, config: IntegratorConfig = TIGHT) -> EquivalenceResult:
    """Full relative-phase integration against the Möbius reduction for one random draw.

    θ is the splay set plus uniform noise in [−0.05, 0.05); α has modulus
    0.4 and random argument, ψ is random.  Returns the sup over time and
    leaves of the wrapped phase difference.
    """
    p = params if params is not None else StarParams(10.0, 1.5, 0.3, n_leaves)
    if p.n_leaves != n_leaves:
        p = StarParams(p.beta, p.sigma, p.delta, n_leaves)
    rng = stream(seed, "ws-equivalence", n_leaves, draw)
    th = splay_angles(n_leaves) + rng.uniform(-0.05, 0.05, n_leaves)
    a0 = 0.4 * complex(np.exp(1j * rng.uniform(0, TWO_PI)))
    psi0 = float(rng.uniform(0, TWO_PI))
    phi0 = reconstruct_phases(WsState(a0, psi0, th))
    grid = np.linspace(0.0, t_end, samples)
    full = integrate(single_star_field(p), np.concatenate([phi0, [0.0]]), (0.0, t_end), config,
                     t_eval=grid, record_states=True)
    red = integrate(ws_field(p, th), [a0.real, a0.imag, psi0], (0.0, t_end), config,
                    t_eval=grid, record_states=True)
    err = 0.0
    for k in range(grid.size):
        s = red.states[k]
        ph = reconstruct_phases(WsState(complex(s[0], s[1]), s[2], th))
        err = max(err, float(np.max(np.abs(np.angle(np.exp(1j * (ph - full.states[k, :n_leaves])))))))
    return EquivalenceResult(n_leaves, draw, err)


def hub_reduction_error(n_leaves: int = 16, epsilon: float = 0.2, *, params: StarParams | None = None,
                        t_end: float = 10.0, samples: int = 201, seed: int = 0,
                        config: IntegratorConfig = TIGHT) -> float:
    """Hub-coupled stars in full phase space against the reduced (α±, ψ±, Γ) system.

    Returns the largest deviation of z+, z- and Γ (wrapped) over the run.
    """
    p = params if params is not None else StarParams(10.0, 1.5, 0.3, n_leaves)
    rng = stream(seed, "hub-reduction")
    n = n_leaves
    thp = splay_angles(n) + rng.uniform(-0.05, 0.05, n)
    thm = splay_angles(n) + rng.uniform(-0.05, 0.05, n)
    ap = 0.8 * complex(np.exp(1j * rng.uniform(0, TWO_PI)))
    am = 0.1 * complex(np.exp(1j * rng.uniform(0, TWO_PI)))
    pp, pm, g0 = rng.uniform(0, TWO_PI, 3)
    lp = reconstruct_phases(WsState(ap, pp, thp))
    lm = reconstruct_phases(WsState(am, pm, thm))
    y0 = np.concatenate([[g0], g0 + lp, [0.0], lm])
    cs = CouplingSpec.kuramoto_sakaguchi(epsilon, p.delta, pattern="hub")
    grid = np.linspace(0.0, t_end, samples)
    full = integrate(coupled_stars_field(p, p, cs), y0, (0.0, t_end), config, t_eval=grid, record_states=True)
    red = integrate(hub_coupled_ws_field(p, p, epsilon, thp, thm),
                    [ap.real, ap.imag, pp, am.real, am.imag, pm, g0], (0.0, t_end), config,
                    t_eval=grid, record_states=True)
    err = 0.0
    for k in range(grid.size):
        y, s = full.states[k], red.states[k]
        zp = order_parameter_ws(complex(s[0], s[1]), s[2], thp)
        zm = order_parameter_ws(complex(s[3], s[4]), s[5], thm)
        dg = math.remainder(y[0] - y[n + 1] - s[6], TWO_PI)
        err = max(err, abs(star_order_parameter(y, 0, n) - zp), abs(star_order_parameter(y, 1, n) - zm), abs(dg))
    return float(err)
