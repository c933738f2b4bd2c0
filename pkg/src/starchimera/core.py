"""Star-network phase models: parameters, states and vector fields.

Two stars labelled ``+`` and ``-`` each have a hub with frequency ``beta``
and ``n_leaves`` leaves with unit frequency.  Inside a star the hub and its
leaves interact through Kuramoto-Sakaguchi coupling of strength ``sigma``
and frustration ``delta`` (shear already scaled out); the stars interact
through a coupling function ``h`` of the phase difference, weighted by
``epsilon``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numba
import numpy as np

from . import _kernels
from .integrate import VectorField

TWO_PI = 2.0 * math.pi


class ContractError(ValueError):
    """Inputs violate an operation's preconditions (shapes, ranges)."""


@dataclass(frozen=True)
class StarParams:
    beta: float
    sigma: float
    delta: float
    n_leaves: int

    def __post_init__(self):
        if not self.beta > 1:
            raise ContractError(f"beta must exceed 1, got {self.beta}")
        if not 0 < self.delta < math.pi / 4:
            raise ContractError(f"delta must lie in (0, pi/4), got {self.delta}")
        if not self.sigma >= 0:
            raise ContractError(f"sigma must be non-negative, got {self.sigma}")
        if int(self.n_leaves) != self.n_leaves or self.n_leaves < 1:
            raise ContractError(f"n_leaves must be a positive integer, got {self.n_leaves}")

    def with_sigma(self, sigma: float) -> "StarParams":
        return StarParams(self.beta, sigma, self.delta, self.n_leaves)

    @classmethod
    def from_shear(cls, shear: float, coupling: float, inter_coupling: float,
                   n_leaves: int, delta: float) -> tuple["StarParams", float]:
        """Rescale the shear model (hub degree N, shear c, strength λ, ϵ).

        Uses σ = 1/c, ε = ϵσ/λ and β = N.  Returns ``(params, epsilon)``.
        """
        sigma = 1.0 / shear
        return cls(float(n_leaves), sigma, delta, n_leaves), inter_coupling * sigma / coupling


@dataclass(frozen=True, eq=False)
class PhaseState:
    """Hub and leaf phases of one or two stars, reduced to [0, 2π).

    ``hubs`` has shape ``(stars,)`` and ``leaves`` shape ``(stars, n)``.
    """

    hubs: np.ndarray
    leaves: np.ndarray

    def __post_init__(self):
        hubs = np.mod(np.atleast_1d(np.asarray(self.hubs, dtype=float)), TWO_PI)
        leaves = np.mod(np.atleast_2d(np.asarray(self.leaves, dtype=float)), TWO_PI)
        if hubs.ndim != 1 or hubs.size not in (1, 2) or leaves.shape[0] != hubs.size:
            raise ContractError("need one hub phase and one leaf vector per star (1 or 2 stars)")
        hubs.setflags(write=False)
        leaves.setflags(write=False)
        object.__setattr__(self, "hubs", hubs)
        object.__setattr__(self, "leaves", leaves)

    @property
    def star_count(self) -> int:
        return self.hubs.size

    @property
    def n_leaves(self) -> int:
        return self.leaves.shape[1]

    def relative_phases(self, star: int = 0) -> np.ndarray:
        return np.mod(self.leaves[star] - self.hubs[star], TWO_PI)

    def to_vector(self) -> np.ndarray:
        """Flatten as ``(hub, leaves)`` per star."""
        return np.concatenate([np.concatenate([[h], lv]) for h, lv in zip(self.hubs, self.leaves)])

    @classmethod
    def from_vector(cls, y, star_count: int = 2) -> "PhaseState":
        y = np.asarray(y, dtype=float).reshape(star_count, -1)
        return cls(y[:, 0], y[:, 1:])

    def __eq__(self, other):
        if not isinstance(other, PhaseState):
            return NotImplemented
        return np.array_equal(self.hubs, other.hubs) and np.array_equal(self.leaves, other.leaves)


@dataclass(frozen=True)
class OrderParameter:
    value: complex

    @property
    def re(self) -> float:
        return self.value.real

    @property
    def im(self) -> float:
        return self.value.imag

    @property
    def r(self) -> float:
        return abs(self.value)

    def __complex__(self):
        return complex(self.value)


def mean_field(phases) -> complex:
    return complex(np.mean(np.exp(1j * np.asarray(phases, dtype=float))))


def order_parameter(state: PhaseState, star: int = 0) -> OrderParameter:
    """z = (1/N) Σ exp(i(φ_j − φ_0)) for the selected star."""
    return OrderParameter(mean_field(state.leaves[star] - state.hubs[star]))


def star_order_parameter(y: np.ndarray, star: int, n_leaves: int) -> complex:
    """Order parameter read directly from a flattened two-star vector."""
    o = star * (n_leaves + 1)
    return mean_field(y[o + 1:o + n_leaves + 1] - y[o])


# ---------------------------------------------------------------------------
# inter-star coupling

FAMILIES = ("general", "sinusoidal", "kuramoto-sakaguchi")
PATTERNS = ("full", "sparse", "hub", "adjacency")


@lru_cache(maxsize=None)
def _wrap_general(h: Callable):
    def hh(x, hp):
        return h(x)

    try:
        jh = h if isinstance(h, numba.core.registry.CPUDispatcher) else numba.njit(h)
        wrapped = numba.njit(lambda x, hp: jh(x))
        wrapped(0.3, np.zeros(0))
        return wrapped
    except Exception:  # not expressible in nopython mode; run as Python
        return hh


@dataclass(frozen=True, eq=False)
class CouplingSpec:
    """Inter-star coupling ``strength * Σ_j A_ij h(φ_i − φ_j)``.

    The argument of ``h`` is (own phase) − (partner phase).  Families:

    * ``general``: any 2π-periodic ``func(x)``;
    * ``sinusoidal``: ``c1 * sin(x + offset)``;
    * ``kuramoto-sakaguchi``: ``sin(−x + offset)``, i.e. sin(partner − own + δ).

    Patterns: ``full`` couples leaf i to leaf i, ``sparse`` only leaves in
    ``indices``, ``hub`` only the hubs, ``adjacency`` an explicit 0/1 matrix
    of side ``n_leaves + 1`` (index 0 is the hub).
    """

    strength: float
    family: str = "kuramoto-sakaguchi"
    pattern: str = "full"
    c1: float = 1.0
    offset: float = 0.0
    func: Callable | None = None
    indices: tuple[int, ...] = ()
    adjacency: np.ndarray | None = None

    def __post_init__(self):
        if not self.strength >= 0:
            raise ContractError("coupling strength must be non-negative")
        if self.family not in FAMILIES:
            raise ContractError(f"unknown family {self.family!r}")
        if self.pattern not in PATTERNS:
            raise ContractError(f"unknown pattern {self.pattern!r}")
        if self.family == "general" and not callable(self.func):
            raise ContractError("general family needs a callable func")
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        if self.adjacency is not None:
            a = np.asarray(self.adjacency)
            if not np.all((a == 0) | (a == 1)):
                raise ContractError("adjacency entries must be 0 or 1")
            object.__setattr__(self, "adjacency", a.astype(np.int64))

    @classmethod
    def general(cls, strength, func, pattern="full", **kw) -> "CouplingSpec":
        return cls(strength, "general", pattern, func=func, **kw)

    @classmethod
    def sinusoidal(cls, strength, c1=1.0, offset=0.0, pattern="full", **kw) -> "CouplingSpec":
        return cls(strength, "sinusoidal", pattern, c1=c1, offset=offset, **kw)

    @classmethod
    def kuramoto_sakaguchi(cls, strength, delta, pattern="full", **kw) -> "CouplingSpec":
        return cls(strength, "kuramoto-sakaguchi", pattern, offset=delta, **kw)

    @property
    def k(self) -> int:
        return len(self.indices)

    def with_strength(self, strength: float) -> "CouplingSpec":
        return CouplingSpec(strength, self.family, self.pattern, self.c1, self.offset,
                            self.func, self.indices, self.adjacency)

    def kernel(self) -> tuple[Callable, np.ndarray]:
        """Scalar ``h(x, hp)`` and its parameter vector."""
        if self.family == "sinusoidal":
            return _kernels.sinusoidal_h, np.array([self.c1, self.offset])
        if self.family == "kuramoto-sakaguchi":
            return _kernels.sinusoidal_h, np.array([-1.0, -self.offset])
        return _wrap_general(self.func), np.zeros(0)

    def h(self, x):
        """Evaluate the coupling function on an array of phase differences."""
        x = np.asarray(x, dtype=float)
        if self.family == "general":
            return np.vectorize(self.func, otypes=[float])(x)
        _, hp = self.kernel()
        return hp[0] * np.sin(x + hp[1])

    def edges(self, n_leaves: int) -> tuple[np.ndarray, np.ndarray]:
        """Nonzero entries ``(i, j)`` of the inter-star adjacency."""
        if self.pattern == "full":
            i = np.arange(1, n_leaves + 1)
            return i, i.copy()
        if self.pattern == "sparse":
            idx = np.array(sorted(set(self.indices)), dtype=np.int64)
            if idx.size and (idx.min() < 1 or idx.max() > n_leaves):
                raise ContractError(f"sparse indices must lie in 1..{n_leaves}")
            return idx, idx.copy()
        if self.pattern == "hub":
            return np.array([0]), np.array([0])
        a = self.adjacency
        if a is None or a.shape != (n_leaves + 1, n_leaves + 1):
            raise ContractError(f"adjacency must be a {(n_leaves + 1,) * 2} 0/1 matrix")
        i, j = np.nonzero(a)
        return i.astype(np.int64), j.astype(np.int64)


# ---------------------------------------------------------------------------
# vector fields

def single_star_field(params: StarParams) -> VectorField:
    """Relative-phase field on ``(φ_1..φ_N, φ_0)``."""
    return VectorField(_kernels.single_star_relative,
                       (float(params.beta), float(params.sigma), float(params.delta)),
                       params.n_leaves + 1)


def rhs_single_star_relative(params: StarParams, state) -> np.ndarray:
    """Velocities of relative leaf phases and of the hub.

    ``state`` is ``(φ_1..φ_N, φ_0)`` with leaves measured from the hub, or a
    one-star :class:`PhaseState` whose leaf entries already hold relative
    phases.
    """
    if isinstance(state, PhaseState):
        if state.star_count != 1:
            raise ContractError("single-star field needs a one-star state")
        y = np.concatenate([state.leaves[0], state.hubs])
    else:
        y = np.asarray(state, dtype=float)
    if y.shape != (params.n_leaves + 1,):
        raise ContractError(f"state has shape {y.shape}, expected ({params.n_leaves + 1},)")
    return single_star_field(params)(0.0, y)


def coupled_stars_field(plus: StarParams, minus: StarParams, coupling: CouplingSpec) -> VectorField:
    if plus.n_leaves != minus.n_leaves:
        raise ContractError("both stars need the same number of leaves")
    n = plus.n_leaves
    h, hp = coupling.kernel()
    src, dst = coupling.edges(n)
    args = (float(plus.beta), float(plus.sigma), float(plus.delta),
            float(minus.beta), float(minus.sigma), float(minus.delta),
            float(coupling.strength), src.astype(np.int64), dst.astype(np.int64), hp)
    return VectorField(_kernels.coupled_stars_kernel(h), args, 2 * (n + 1))


def rhs_coupled_stars(plus: StarParams, minus: StarParams, coupling: CouplingSpec,
                      state) -> np.ndarray:
    """Velocities of all 2(N+1) absolute phases, laid out ``(hub+, leaves+, hub-, leaves-)``."""
    y = state.to_vector() if isinstance(state, PhaseState) else np.asarray(state, dtype=float)
    if isinstance(state, PhaseState) and state.star_count != 2:
        raise ContractError("coupled field needs a two-star state")
    if y.shape != (2 * (plus.n_leaves + 1),):
        raise ContractError(f"state has shape {y.shape}, expected ({2 * (plus.n_leaves + 1)},)")
    return coupled_stars_field(plus, minus, coupling)(0.0, y)


def _csr(adjacency: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(adjacency)
    rows, cols = np.nonzero(a)
    indptr = np.zeros(a.shape[0] + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    return np.cumsum(indptr), cols.astype(np.int64)


def check_network(degrees, adjacency) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(adjacency)
    k = np.asarray(degrees, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractError("adjacency must be square")
    if not np.array_equal(a, a.T):
        raise ContractError("adjacency must be symmetric")
    if k.shape != (a.shape[0],) or not np.array_equal(k, a.sum(axis=1)):
        raise ContractError("degrees must equal adjacency row sums")
    return k, a


def complex_network_field(degrees, adjacency, sigma: float, delta: float,
                          *, validate: bool = True) -> VectorField:
    k, a = check_network(degrees, adjacency) if validate else (np.asarray(degrees, float), adjacency)
    indptr, indices = _csr(a)
    return VectorField(_kernels.complex_network, (k, indptr, indices, float(sigma), float(delta)),
                       k.size)


def rhs_complex_network(degrees, adjacency, sigma: float, delta: float, state) -> np.ndarray:
    """dφ_i/dt = k_i + σ Σ_j A_ij sin(φ_j − φ_i + δ)."""
    fld = complex_network_field(degrees, adjacency, sigma, delta)
    y = np.asarray(state, dtype=float)
    if y.shape != (fld.dim,):
        raise ContractError(f"state has shape {y.shape}, expected ({fld.dim},)")
    return fld(0.0, y)


def coupled_networks_field(degrees, adjacency, sigma: float, delta: float,
                           epsilon: float) -> VectorField:
    """Two copies of a network, vertex k of one coupled only to vertex k of the other."""
    k, a = check_network(degrees, adjacency)
    indptr, indices = _csr(a)
    return VectorField(_kernels.coupled_networks,
                       (k, indptr, indices, float(sigma), float(delta), float(epsilon)), 2 * k.size)
