"""Adaptive explicit Runge-Kutta integration with dense output and events.

The stepper is the Dormand-Prince 5(4) pair with its fourth-order continuous
extension.  The stepping loop is written once in numpy-style code; it is
compiled with numba when the vector field itself is a numba function and
otherwise runs as plain Python, so both paths share a single source.

Observation and event handling live in Python.  The compiled loop advances
the solution to the next observation time and hands back the dense-output
coefficients of every accepted step, so samples and event bisection use the
interpolant rather than re-integration.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numba
import numpy as np

TWO_PI = 2.0 * math.pi

# Dormand-Prince 5(4) tableau (Hairer, Norsett & Wanner, DOPRI5).
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_A71, _A73, _A74, _A75, _A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
)
_D1, _D3, _D4, _D5, _D6, _D7 = (
    -12715105075 / 11282082432,
    87487479700 / 32700410799,
    -10690763975 / 1880347072,
    701980252875 / 199316789632,
    -1453857185 / 822651844,
    69997945 / 29380423,
)

SCHEMES = ("dopri5",)

# status codes returned by the stepping loop
_OK, _FULL, _UNDERFLOW = 0, 1, 2


class IntegrationError(RuntimeError):
    """Step size underflow or a non-finite state.

    ``t_last`` is the last time at which the solution was accepted and
    ``record`` holds whatever was observed up to that point.
    """

    def __init__(self, message: str, t_last: float, record: "RunRecord | None" = None):
        super().__init__(f"{message} (last good t = {t_last!r})")
        self.t_last = t_last
        self.record = record


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = math.inf
    scheme: str = "dopri5"
    first_step: float | None = None

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not self.max_step > 0:
            raise ValueError("max_step must be positive")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; available: {SCHEMES}")

    def halved(self) -> "IntegratorConfig":
        return IntegratorConfig(self.rel_tol / 2, self.abs_tol / 2, self.max_step, self.scheme)


@dataclass(frozen=True)
class VectorField:
    """A right-hand side ``fn(t, y, args)`` together with its ``args`` tuple.

    When ``fn`` is a numba dispatcher the whole stepping loop is compiled
    around it.
    """

    fn: Callable
    args: tuple = ()
    dim: int | None = None

    @property
    def compiled(self) -> bool:
        return isinstance(self.fn, numba.core.registry.CPUDispatcher)

    def __call__(self, t, y):
        return self.fn(t, np.asarray(y, dtype=float), self.args)


def as_field(rhs) -> VectorField:
    if isinstance(rhs, VectorField):
        return rhs
    return VectorField(_call_plain, (rhs,))


def _call_plain(t, y, args):
    return np.asarray(args[0](t, y), dtype=float)


@dataclass(frozen=True)
class EventSpec:
    """Threshold crossing of a scalar observable.

    ``observable`` is the name of an observer or a callable ``g(t, y)``.
    ``direction`` is ``"falling"``, ``"rising"`` or ``"either"``.
    """

    observable: str | Callable
    threshold: float
    direction: str = "either"
    terminal: bool = True
    name: str | None = None

    def __post_init__(self):
        if not math.isfinite(self.threshold):
            raise ValueError("event threshold must be finite")
        if self.direction not in ("falling", "rising", "either"):
            raise ValueError(f"bad direction {self.direction!r}")

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        if isinstance(self.observable, str):
            return self.observable
        return getattr(self.observable, "__name__", "event")

    def crossed(self, g0: float, g1: float) -> bool:
        if self.direction == "falling":
            return g0 >= 0 > g1
        if self.direction == "rising":
            return g0 <= 0 < g1
        return (g0 >= 0 > g1) or (g0 <= 0 < g1)


@dataclass
class RunRecord:
    times: np.ndarray
    observables: dict[str, np.ndarray] = field(default_factory=dict)
    event_time: float | None = None
    event_name: str | None = None
    terminal_state: object = None
    states: np.ndarray | None = None
    n_steps: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        for k, v in self.observables.items():
            v = np.asarray(v)
            if v.shape[0] != self.times.size:
                raise ValueError(f"column {k!r} has {v.shape[0]} rows, expected {self.times.size}")
            self.observables[k] = v

    @property
    def censored(self) -> bool:
        return self.event_time is None

    def to_csv(self, path) -> None:
        """Write ``t`` plus one column per observable, round-trip decimal."""
        names = list(self.observables)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", *names])
            cols = [self.observables[n] for n in names]
            for i, t in enumerate(self.times):
                w.writerow([repr(float(t)), *(repr(float(c[i])) for c in cols)])

    @classmethod
    def from_csv(cls, path) -> "RunRecord":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        data = np.array([[float(x) for x in r] for r in body]).reshape(len(body), len(header))
        return cls(times=data[:, 0], observables={h: data[:, i + 1] for i, h in enumerate(header[1:])})


def _advance(rhs, args, t, y, k1, h, t_stop, t_final, rtol, atol, cap, max_step,
             ts, hs, cs):
    """Take accepted steps until ``t >= t_stop``; the last step lands on ``t_final``.

    Accepted steps are written to ``ts``/``hs``/``cs`` (dense coefficients).
    Returns ``(t, y, k1, h, n_accepted, n_rejected, status)``.
    """
    m = 0
    nrej = 0
    cap_steps = ts.shape[0]
    while t < t_stop:
        if m == cap_steps:
            return t, y, k1, h, m, nrej, 1
        h = min(h, max_step)
        last = False
        if t + h >= t_final:
            h = t_final - t
            last = True
        hmin = 1e-14 * max(abs(t), 1.0)
        if h < hmin:
            return t, y, k1, h, m, nrej, 2
        k2 = rhs(t + _C2 * h, y + h * (_A21 * k1), args)
        k3 = rhs(t + _C3 * h, y + h * (_A31 * k1 + _A32 * k2), args)
        k4 = rhs(t + _C4 * h, y + h * (_A41 * k1 + _A42 * k2 + _A43 * k3), args)
        k5 = rhs(t + _C5 * h, y + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4), args)
        k6 = rhs(t + h, y + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5), args)
        y1 = y + h * (_A71 * k1 + _A73 * k3 + _A74 * k4 + _A75 * k5 + _A76 * k6)
        k7 = rhs(t + h, y1, args)
        ev = h * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7)
        sc = atol + rtol * np.minimum(np.maximum(np.abs(y), np.abs(y1)), cap)
        err = math.sqrt(np.mean((ev / sc) ** 2))
        if not math.isfinite(err):
            h = 0.1 * h
            nrej += 1
            continue
        if err <= 1.0:
            ts[m] = t
            hs[m] = h
            d = y1 - y
            cs[m, 0, :] = y
            cs[m, 1, :] = d
            cs[m, 2, :] = h * k1 - d
            cs[m, 3, :] = d - h * k7 - cs[m, 2, :]
            cs[m, 4, :] = h * (_D1 * k1 + _D3 * k3 + _D4 * k4 + _D5 * k5 + _D6 * k6 + _D7 * k7)
            m += 1
            t = t_final if last else t + h
            y = y1
            k1 = k7
            fac = 10.0 if err == 0.0 else 0.9 * err ** -0.2
            h = h * min(5.0, max(0.2, fac))
        else:
            nrej += 1
            h = h * max(0.2, 0.9 * err ** -0.2)
    return t, y, k1, h, m, nrej, 0


_advance_jit = numba.njit(cache=True)(_advance)


def _initial_step(field: VectorField, t0, y0, f0, rtol, atol, cap) -> float:
    # Hairer's starting step heuristic for a fifth order method
    sc = atol + rtol * np.minimum(np.abs(y0), cap)
    d0 = math.sqrt(np.mean((y0 / sc) ** 2))
    d1 = math.sqrt(np.mean((f0 / sc) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    f1 = field.fn(t0 + h0, y0 + h0 * f0, field.args)
    d2 = math.sqrt(np.mean(((f1 - f0) / sc) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


def dense_eval(t0: float, h: float, c: np.ndarray, t: float) -> np.ndarray:
    """Evaluate the continuous extension of one stored step at time ``t``."""
    s = (t - t0) / h
    s1 = 1.0 - s
    return c[0] + s * (c[1] + s1 * (c[2] + s * (c[3] + s1 * c[4])))


class _Steps:
    """Accepted steps of the current observation interval (dense output)."""

    def __init__(self, ts, hs, cs):
        self.ts, self.hs, self.cs = ts, hs, cs

    def __call__(self, t: float) -> np.ndarray:
        i = int(np.searchsorted(self.ts, t, side="right")) - 1
        i = min(max(i, 0), self.ts.size - 1)
        return dense_eval(self.ts[i], self.hs[i], self.cs[i], t)


def observation_times(t0: float, t1: float, dt_obs: float | None, t_eval=None) -> np.ndarray:
    if t_eval is not None:
        te = np.asarray(t_eval, dtype=float)
        if te.size and (te[0] < t0 or te[-1] > t1 or np.any(np.diff(te) <= 0)):
            raise ValueError("t_eval must be increasing and inside t_span")
        grid = te
    elif dt_obs is not None:
        n = int(math.floor((t1 - t0) / dt_obs + 1e-9))
        grid = t0 + dt_obs * np.arange(n + 1)
    else:
        grid = np.array([t0])
    if grid.size == 0 or grid[0] > t0:
        grid = np.concatenate([[t0], grid])
    if grid[-1] < t1 * (1 - 1e-15) - 1e-300 and t1 - grid[-1] > 1e-12 * max(1.0, abs(t1)):
        grid = np.concatenate([grid, [t1]])
    return grid


def _bisect(g, ta, tb, ga, spec: EventSpec, tol_fn) -> float:
    while tb - ta > tol_fn(tb):
        tm = 0.5 * (ta + tb)
        gm = g(tm)
        if spec.crossed(ga, gm):
            tb = tm
        else:
            ta, ga = tm, gm
    return tb


def integrate(
    rhs,
    initial,
    t_span: tuple[float, float],
    config: IntegratorConfig | None = None,
    *,
    observers: Mapping[str, Callable] | None = None,
    events: Sequence[EventSpec] = (),
    dt_obs: float | None = None,
    t_eval=None,
    periodic: bool = False,
    record_states: bool = False,
    buffer_steps: int = 4096,
) -> RunRecord:
    """Integrate ``rhs`` over ``t_span`` and sample observers on a grid.

    ``rhs`` is a :class:`VectorField` or a plain callable ``f(t, y)``.
    Observers are callables ``obs(t, y) -> float`` sampled every ``dt_obs``
    (or at ``t_eval``).  Events are tested on consecutive samples and then
    localized by bisection on the dense interpolant; a terminal event stops
    the run at the crossing.

    With ``periodic=True`` the state is treated as a vector of angles: it is
    reduced mod 2π between observation intervals and the relative part of
    the error tolerance is measured against at most one full turn.
    """
    cfg = config or IntegratorConfig()
    fld = as_field(rhs)
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ValueError("t_span must satisfy t1 > t0")
    y = np.array(initial, dtype=float).ravel()
    n = y.size
    if fld.dim is not None and fld.dim != n:
        raise ValueError(f"vector field has dimension {fld.dim}, state has {n}")
    observers = dict(observers or {})
    for ev in events:
        if isinstance(ev.observable, str) and ev.observable not in observers:
            raise ValueError(f"event observable {ev.observable!r} is not an observer")

    cap = TWO_PI if periodic else math.inf
    rtol, atol = cfg.rel_tol, cfg.abs_tol
    advance = _advance_jit if fld.compiled else _advance
    k1 = np.asarray(fld.fn(t0, y, fld.args), dtype=float)
    if k1.shape != y.shape:
        raise ValueError(f"rhs returned shape {k1.shape}, expected {y.shape}")
    h = cfg.first_step or _initial_step(fld, t0, y, k1, rtol, atol, cap)

    grid = observation_times(t0, t1, dt_obs, t_eval)
    ts = np.empty(buffer_steps)
    hs = np.empty(buffer_steps)
    cs = np.empty((buffer_steps, 5, n))

    def tol_fn(t):
        return rtol * abs(t) + atol

    def evaluate(name_or_fn, t, state):
        fn = observers[name_or_fn] if isinstance(name_or_fn, str) else name_or_fn
        return float(fn(t, state))

    times = [t0]
    cols = {k: [float(f(t0, y))] for k, f in observers.items()}
    states = [y.copy()] if record_states else None
    gvals = [evaluate(ev.observable, t0, y) - ev.threshold for ev in events]
    n_steps = 0
    t = t0
    prev_last = None  # last step of the previous interval, for bisection
    event_time = event_name = None
    terminal = y.copy()

    def partial_record():
        return RunRecord(np.array(times), {k: np.array(v) for k, v in cols.items()},
                         states=np.array(states) if states is not None else None,
                         n_steps=n_steps)

    for t_obs in grid[1:]:
        seg_t, seg_h, seg_c = [], [], []
        if prev_last is not None:
            seg_t.append(prev_last[0]); seg_h.append(prev_last[1]); seg_c.append(prev_last[2])
        while t < t_obs:
            t, y, k1, h, m, _, status = advance(
                fld.fn, fld.args, t, y, k1, h, t_obs, t1, rtol, atol, cap, cfg.max_step, ts, hs, cs)
            n_steps += m
            if m:
                seg_t.extend(ts[:m]); seg_h.extend(hs[:m]); seg_c.extend(cs[:m].copy())
            if status == _UNDERFLOW or not np.all(np.isfinite(y)):
                last_good = float(seg_t[-1] + seg_h[-1]) if seg_t else t
                raise IntegrationError("step size underflow", last_good, partial_record())
        steps = _Steps(np.array(seg_t), np.array(seg_h), np.array(seg_c))
        y_obs = steps(t_obs) if t_obs < t else y.copy()
        prev_last = (seg_t[-1], seg_h[-1], seg_c[-1])

        fired = None
        for i, ev in enumerate(events):
            g1 = evaluate(ev.observable, t_obs, y_obs) - ev.threshold
            if ev.terminal and ev.crossed(gvals[i], g1):
                def g(tt, ev=ev):
                    return evaluate(ev.observable, tt, steps(tt)) - ev.threshold
                te = _bisect(g, times[-1], t_obs, gvals[i], ev, tol_fn)
                if fired is None or te < fired[0]:
                    fired = (te, ev.label)
            gvals[i] = g1
        if fired is not None:
            event_time, event_name = fired
            y_ev = steps(event_time)
            if event_time > times[-1]:
                times.append(event_time)
                for k, f in observers.items():
                    cols[k].append(float(f(event_time, y_ev)))
                if states is not None:
                    states.append(np.mod(y_ev, TWO_PI) if periodic else y_ev.copy())
            terminal = y_ev
            break

        times.append(float(t_obs))
        for k, f in observers.items():
            cols[k].append(float(f(t_obs, y_obs)))
        if states is not None:
            states.append(np.mod(y_obs, TWO_PI) if periodic else y_obs.copy())
        terminal = y_obs
        if periodic:
            y = np.mod(y, TWO_PI)

    rec = partial_record()
    rec.event_time = event_time
    rec.event_name = event_name
    rec.terminal_state = np.mod(terminal, TWO_PI) if periodic else np.asarray(terminal)
    return rec


@dataclass
class AdiabaticPoint:
    sigma: float
    r_mean: float
    z_mean: complex
    terminal_state: np.ndarray


def trapezoid_mean(t: np.ndarray, x: np.ndarray) -> float:
    t = np.asarray(t, dtype=float)
    if t.size < 2:
        return float(np.asarray(x)[0])
    return float(np.trapezoid(x, t) / (t[-1] - t[0]))


def integrate_adiabatic(
    field_for_sigma: Callable[[float], VectorField],
    sigma_schedule: Sequence[float],
    initial,
    order_parameter: Callable[[np.ndarray], complex],
    settle_time: float,
    measure_time: float,
    config: IntegratorConfig | None = None,
    *,
    dt_obs: float = 0.1,
    perturb: Callable[[int, np.ndarray], np.ndarray] | None = None,
    periodic: bool = True,
    on_point: Callable[[AdiabaticPoint], None] | None = None,
) -> list[AdiabaticPoint]:
    """Adiabatic continuation in the coupling strength.

    For each σ the previous terminal state (optionally passed through
    ``perturb(index, state)``) is integrated for ``settle_time``, output
    discarded, and then for ``measure_time`` while ``|order_parameter|`` is
    averaged with the trapezoid rule.
    """
    sched = np.asarray(sigma_schedule, dtype=float)
    d = np.diff(sched)
    if d.size and not (np.all(d >= 0) or np.all(d <= 0)):
        raise ValueError("sigma_schedule must be monotone")
    y = np.array(initial, dtype=float)
    out = []
    for i, s in enumerate(sched):
        if perturb is not None:
            y = perturb(i, y)
        fld = field_for_sigma(float(s))
        try:
            if settle_time > 0:
                y = integrate(fld, y, (0.0, settle_time), config, periodic=periodic).terminal_state
            rec = integrate(
                fld, y, (0.0, measure_time), config, dt_obs=dt_obs, periodic=periodic,
                observers={"re": lambda t, x: order_parameter(x).real,
                           "im": lambda t, x: order_parameter(x).imag,
                           "r": lambda t, x: abs(order_parameter(x))},
            )
        except IntegrationError as exc:
            raise IntegrationError(f"adiabatic continuation failed at sigma={s!r}", exc.t_last,
                                   exc.record) from exc
        y = rec.terminal_state
        pt = AdiabaticPoint(
            sigma=float(s),
            r_mean=trapezoid_mean(rec.times, rec.observables["r"]),
            z_mean=complex(trapezoid_mean(rec.times, rec.observables["re"]),
                           trapezoid_mean(rec.times, rec.observables["im"])),
            terminal_state=np.array(y),
        )
        out.append(pt)
        if on_point is not None:
            on_point(pt)
    return out
