"""Synchronization diagrams of a single star by adiabatic continuation in σ."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..core import ContractError, StarParams, mean_field, single_star_field
from ..integrate import AdiabaticPoint, IntegratorConfig, integrate_adiabatic
from ..ws import fixed_point_sync
from .rng import stream

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class DiagramPoint:
    sigma: float
    r: float


def sigma_schedule(sigma_max: float, dsigma: float, direction: str) -> np.ndarray:
    if not dsigma > 0:
        raise ContractError("dsigma must be positive")
    n = int(round(sigma_max / dsigma))
    up = dsigma * np.arange(n + 1)
    if direction == "forward":
        return up
    if direction == "backward":
        return up[::-1]
    raise ContractError(f"direction must be 'forward' or 'backward', got {direction!r}")


def sync_diagram(beta: float, delta: float, n_leaves: int, direction: str, *, sigma_max: float = 3.0,
                 dsigma: float = 0.02, settle: float = 100.0, measure: float = 50.0, seed: int = 0,
                 jitter: float = 0.01, config: IntegratorConfig | None = None,
                 on_point: Callable[[DiagramPoint], None] | None = None) -> list[DiagramPoint]:
    """Time-averaged r along an increasing or decreasing σ schedule.

    Forward starts from uniformly random phases at σ = 0.  Backward starts
    from the locked state at σ_max and adds uniform noise in [0, jitter) to
    every coordinate before each σ step.  The state is ``(φ_1..φ_N, φ_0)``
    with leaves relative to the hub.
    """
    sched = sigma_schedule(sigma_max, dsigma, direction)
    rng = stream(seed, f"diagram-{direction}")
    base = StarParams(beta, max(sigma_max, dsigma), delta, n_leaves)
    if direction == "forward":
        y0 = rng.uniform(0.0, TWO_PI, n_leaves + 1)
        perturb = None
    else:
        y0 = np.concatenate([np.full(n_leaves, fixed_point_sync(base).phi_C), [0.0]])

        def perturb(i, y):
            return y + rng.uniform(0.0, jitter, y.size)

    def field_for(s):
        return single_star_field(base.with_sigma(s))

    def z_of(y):
        return mean_field(y[:n_leaves])

    def cb(p: AdiabaticPoint):
        if on_point is not None:
            on_point(DiagramPoint(p.sigma, p.r_mean))

    pts = integrate_adiabatic(field_for, sched, y0, z_of, settle, measure, config,
                              dt_obs=0.1, perturb=perturb, periodic=True, on_point=cb)
    return [DiagramPoint(p.sigma, p.r_mean) for p in pts]


def transition_sigma(points: list[DiagramPoint], threshold: float, rising: bool) -> float | None:
    """σ of the first schedule step at which r crosses ``threshold``."""
    for a, b in zip(points, points[1:]):
        if rising and a.r <= threshold < b.r:
            return b.sigma
        if not rising and a.r > threshold >= b.r:
            return b.sigma
    return None


def hysteresis_area(forward: list[DiagramPoint], backward: list[DiagramPoint]) -> float:
    """∫ (r_backward − r_forward) dσ over the common σ grid (positive inside the loop)."""
    f = {round(p.sigma, 12): p.r for p in forward}
    b = {round(p.sigma, 12): p.r for p in backward}
    s = np.array(sorted(set(f) & set(b)))
    if s.size < 2:
        return 0.0
    diff = np.array([b[x] - f[x] for x in s])
    return float(np.trapezoid(diff, s))
