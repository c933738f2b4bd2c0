"""Chimera preparation, lifetime measurement and lifetime sweeps for two coupled stars."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..core import ContractError, CouplingSpec, PhaseState, StarParams, coupled_stars_field, star_order_parameter
from ..integrate import EventSpec, IntegratorConfig, RunRecord, integrate
from ..ws import WsState, critical_couplings, fixed_point_async, fixed_point_sync, reconstruct_phases, splay_angles
from .rng import stream

TWO_PI = 2.0 * math.pi
SAMPLES_PER_CYCLE = 10


class ConfigurationError(ContractError):
    """Experiment parameters outside the region where the protocol makes sense."""


def cycles(n: float) -> float:
    """Duration of ``n`` natural-frequency cycles (leaf frequency 1)."""
    return TWO_PI * n


def check_bistable(params: StarParams) -> tuple[float, float]:
    sigma_b, sigma_f = critical_couplings(params.beta, params.delta)
    if not sigma_b < params.sigma < sigma_f:
        raise ConfigurationError(
            f"sigma = {params.sigma} outside the bistability window ({sigma_b:.6g}, {sigma_f:.6g})")
    return sigma_b, sigma_f


def prepare_chimera_initial(plus: StarParams, minus: StarParams, jitter_amplitude: float = 0.01,
                            seed: int = 0, *, rng: np.random.Generator | None = None) -> PhaseState:
    """Coherent star ``+`` at the locked state, incoherent star ``-`` at α^I.

    The incoherent star uses splay constants θ and ψ = 0.  Every coordinate
    then receives an independent uniform offset in [0, jitter_amplitude).
    """
    check_bistable(plus)
    check_bistable(minus)
    if plus.n_leaves != minus.n_leaves:
        raise ConfigurationError("both stars need the same number of leaves")
    if jitter_amplitude < 0:
        raise ConfigurationError("jitter amplitude must be non-negative")
    n = plus.n_leaves
    leaves_p = np.full(n, fixed_point_sync(plus).phi_C)
    leaves_m = reconstruct_phases(WsState(fixed_point_async(minus).alpha_I, 0.0, splay_angles(n)))
    hubs = np.zeros(2)
    leaves = np.vstack([leaves_p, leaves_m])
    if jitter_amplitude > 0:
        g = rng if rng is not None else stream(seed, "chimera-initial")
        jit = g.uniform(0.0, jitter_amplitude, size=2 * (n + 1))
        hubs = hubs + jit[[0, n + 1]]
        leaves = leaves + np.vstack([jit[1:n + 1], jit[n + 2:]])
    return PhaseState(hubs, leaves)


@dataclass(frozen=True)
class ChimeraCriterion:
    """Chimera holds while |z⁻ − α^I| ≤ η and r⁺ ≥ 1 − η.

    With η = 1 the coherent side can never fire (r⁺ ≥ 0); the incoherent
    side can only fire if z⁻ comes within |α^I| of the unit circle on the
    side opposite to α^I.
    """

    eta: float
    alpha_I_ref: complex

    def __post_init__(self):
        if not 0 < self.eta <= 1:
            raise ContractError("eta must lie in (0, 1]")
        object.__setattr__(self, "alpha_I_ref", complex(self.alpha_I_ref))

    @classmethod
    def for_params(cls, eta: float, minus: StarParams) -> "ChimeraCriterion":
        return cls(eta, fixed_point_async(minus).alpha_I)

    def observers(self, n_leaves: int) -> dict[str, Callable]:
        a = self.alpha_I_ref
        return {
            "r_plus": lambda t, y: abs(star_order_parameter(y, 0, n_leaves)),
            "dist_minus": lambda t, y: abs(star_order_parameter(y, 1, n_leaves) - a),
        }

    def events(self) -> list[EventSpec]:
        return [EventSpec("dist_minus", self.eta, "rising", name="incoherent"),
                EventSpec("r_plus", 1.0 - self.eta, "falling", name="coherent")]

    def holds(self, r_plus: float, dist_minus: float) -> bool:
        return dist_minus <= self.eta and r_plus >= 1.0 - self.eta


@dataclass
class LifetimeResult:
    tau: float
    censored: bool
    side: str | None
    horizon: float
    record: RunRecord | None = None


def measure_lifetime(initial: PhaseState, plus: StarParams, minus: StarParams, coupling: CouplingSpec,
                     criterion: ChimeraCriterion, horizon: float, config: IntegratorConfig | None = None,
                     *, samples_per_cycle: int = SAMPLES_PER_CYCLE, keep_record: bool = False) -> LifetimeResult:
    """First time the chimera criterion breaks, or ``inf`` (censored) at ``horizon``.

    Both criterion observables are sampled ``samples_per_cycle`` times per
    cycle; a crossing is localized on the dense interpolant.
    """
    if not horizon > 0:
        raise ContractError("horizon must be positive")
    if initial.star_count != 2 or initial.n_leaves != plus.n_leaves:
        raise ContractError("initial state does not match the two-star parameters")
    fld = coupled_stars_field(plus, minus, coupling)
    rec = integrate(fld, initial.to_vector(), (0.0, horizon), config,
                    observers=criterion.observers(plus.n_leaves), events=criterion.events(),
                    dt_obs=TWO_PI / samples_per_cycle, periodic=True)
    rec.meta.update(epsilon=coupling.strength, eta=criterion.eta)
    if rec.censored:
        return LifetimeResult(math.inf, True, None, horizon, rec if keep_record else None)
    return LifetimeResult(float(rec.event_time), False, rec.event_name, horizon, rec if keep_record else None)


@dataclass
class SweepResult:
    """Lifetimes per (ε, seed); censored samples are stored as ``inf``."""

    epsilons: np.ndarray
    samples: np.ndarray
    sides: list[list[str | None]]
    horizon: float
    family: str = ""
    mean: np.ndarray = field(init=False)
    std: np.ndarray = field(init=False)
    censored_counts: np.ndarray = field(init=False)
    flagged: np.ndarray = field(init=False)
    slope: float = field(init=False)
    intercept: float = field(init=False)
    fit_residual: float = field(init=False)

    def __post_init__(self):
        self.epsilons = np.asarray(self.epsilons, dtype=float)
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 2 or self.samples.shape[0] != self.epsilons.size:
            raise ValueError("samples must have one row per epsilon")
        cens = ~np.isfinite(self.samples)
        self.censored_counts = cens.sum(axis=1)
        self.flagged = self.censored_counts == self.samples.shape[1]
        # restricted mean: a censored sample counts as the horizon (a lower bound)
        clipped = np.where(cens, self.horizon, self.samples)
        self.mean = clipped.mean(axis=1)
        self.std = clipped.std(axis=1)
        self.slope, self.intercept, self.fit_residual = fit_loglog(self.epsilons[~self.flagged],
                                                                   self.mean[~self.flagged])

    @property
    def seeds_per_point(self) -> int:
        return self.samples.shape[1]

    def rows(self) -> list[dict]:
        out = []
        for i, e in enumerate(self.epsilons):
            row = {"epsilon": e, "n_samples": self.seeds_per_point,
                   "n_censored": int(self.censored_counts[i]), "flagged": int(self.flagged[i]),
                   "mean_tau": self.mean[i], "std_tau": self.std[i], "slope": self.slope,
                   "intercept": self.intercept, "fit_residual": self.fit_residual}
            for j, v in enumerate(self.samples[i]):
                row[f"tau_{j}"] = v
            out.append(row)
        return out


def fit_loglog(x, y) -> tuple[float, float, float]:
    """Least-squares line through (log x, log y); returns slope, intercept, rms residual."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        return math.nan, math.nan, math.nan
    lx, ly = np.log(x), np.log(y)
    A = np.vstack([lx, np.ones_like(lx)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, ly, rcond=None)
    res = ly - (slope * lx + icpt)
    return float(slope), float(icpt), float(np.sqrt(np.mean(res ** 2)))


def lifetime_sweep(plus: StarParams, minus: StarParams, coupling: CouplingSpec, epsilons: Sequence[float],
                   n_seeds: int, eta: float, horizon: float, config: IntegratorConfig | None = None, *,
                   seed: int = 0, jitter: float = 0.01, threads: int = 1,
                   samples_per_cycle: int = SAMPLES_PER_CYCLE,
                   on_point: Callable[[int, float, np.ndarray], None] | None = None,
                   experiment: str = "lifetime") -> SweepResult:
    """Lifetimes over a log-spaced ε grid with ``n_seeds`` jittered initial states each.

    The initial state for (ε index i, seed index j) comes from the stream
    ``(seed, experiment, i, j)``.  Results are folded in (i, j) order
    whatever the completion order.
    """
    eps = np.asarray(epsilons, dtype=float)
    if eps.size < 2 or np.any(eps <= 0) or np.any(np.diff(eps) <= 0):
        raise ContractError("epsilon grid must be positive and increasing")
    if n_seeds < 1:
        raise ContractError("need at least one seed per point")
    criterion = ChimeraCriterion.for_params(eta, minus)

    def task(i: int, j: int) -> LifetimeResult:
        init = prepare_chimera_initial(plus, minus, jitter, rng=stream(seed, experiment, i, j))
        return measure_lifetime(init, plus, minus, coupling.with_strength(float(eps[i])), criterion,
                                horizon, config, samples_per_cycle=samples_per_cycle)

    samples = np.empty((eps.size, n_seeds))
    sides: list[list[str | None]] = [[None] * n_seeds for _ in eps]
    if threads <= 1:
        for i in range(eps.size):
            for j in range(n_seeds):
                r = task(i, j)
                samples[i, j], sides[i][j] = r.tau, r.side
            if on_point:
                on_point(i, float(eps[i]), samples[i])
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futs = [[pool.submit(task, i, j) for j in range(n_seeds)] for i in range(eps.size)]
            for i, row in enumerate(futs):
                for j, f in enumerate(row):
                    r = f.result()
                    samples[i, j], sides[i][j] = r.tau, r.side
                if on_point:
                    on_point(i, float(eps[i]), samples[i])
    return SweepResult(eps, samples, sides, horizon, coupling.family)


def sparse_coupling_run(plus: StarParams, minus: StarParams, coupling: CouplingSpec, horizon: float,
                        eta: float = 0.25, config: IntegratorConfig | None = None, *, seed: int = 0,
                        jitter: float = 0.01, samples_per_cycle: int = SAMPLES_PER_CYCLE) -> RunRecord:
    """Chimera under coupling restricted to a few leaves (k/N ≤ 0.05).

    The record's ``meta['persisted']`` is False when the criterion fired;
    the firing time is ``event_time`` (a falsification event).
    """
    if coupling.pattern not in ("sparse", "full"):
        raise ContractError("sparse_coupling_run needs a leaf-to-leaf pattern")
    k = coupling.k if coupling.pattern == "sparse" else plus.n_leaves
    if coupling.strength > 0 and k / plus.n_leaves > 0.05:
        raise ContractError(f"k/N = {k / plus.n_leaves:.3g} exceeds 0.05")
    init = prepare_chimera_initial(plus, minus, jitter, rng=stream(seed, "sparse"))
    res = measure_lifetime(init, plus, minus, coupling, ChimeraCriterion.for_params(eta, minus), horizon,
                           config, samples_per_cycle=samples_per_cycle, keep_record=True)
    rec = res.record
    rec.meta.update(persisted=res.censored, k=k, n_leaves=plus.n_leaves)
    return rec


def general_h(x):
    """Canonical non-sinusoidal coupling h(x) = sin x + 0.3 sin 2x."""
    return math.sin(x) + 0.3 * math.sin(2.0 * x)
