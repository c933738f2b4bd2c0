"""Numba vector fields for the phase models.

Every field has the signature ``f(t, y, args)`` so that it can be handed to
the compiled stepping loop in :mod:`starchimera.integrate`.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numba
import numpy as np

njit = numba.njit(cache=True)


@njit
def single_star_relative(t, y, args):
    # y = (phi_1..phi_N, phi_0), leaves relative to the hub
    beta, sigma, delta = args
    n = y.shape[0] - 1
    out = np.empty_like(y)
    cd = math.cos(delta)
    sd = math.sin(delta)
    s = 0.0
    for j in range(n):
        s += math.sin(y[j]) * cd + math.cos(y[j]) * sd
    mean_field = beta * sigma / n * s
    base = 1.0 - beta - mean_field
    for i in range(n):
        out[i] = base - sigma * (math.sin(y[i]) * cd - math.cos(y[i]) * sd)
    out[n] = beta + mean_field
    return out


@njit
def sinusoidal_h(x, hp):
    return hp[0] * math.sin(x + hp[1])


@njit
def _star_block(y, out, o, n, beta, sigma, delta):
    # absolute phases: hub at o, leaves at o+1..o+n; one pass over the leaves
    ph0 = y[o]
    cd = math.cos(delta)
    sd = math.sin(delta)
    s = 0.0
    for j in range(1, n + 1):
        d = y[o + j] - ph0
        sn = math.sin(d)
        cn = math.cos(d)
        s += sn * cd + cn * sd
        out[o + j] = 1.0 + sigma * (cn * sd - sn * cd)
    out[o] = beta + beta * sigma / n * s


@lru_cache(maxsize=None)
def coupled_stars_kernel(h):
    """Two-star field for inter-star coupling function ``h(x, hp)``.

    ``args = (beta_p, sigma_p, delta_p, beta_m, sigma_m, delta_m, eps, src,
    dst, hp)``.  State layout is ``(hub+, leaves+, hub-, leaves-)`` in
    absolute phases; edge ``e`` adds ``eps*h(phi_i^+ - phi_j^-)`` to node
    ``i = src[e]`` of the plus star and ``eps*h(phi_i^- - phi_j^+)`` to node
    ``i`` of the minus star, with ``j = dst[e]``.
    """
    compiled = isinstance(h, numba.core.registry.CPUDispatcher)

    def field(t, y, args):
        bp, sp, dp, bm, sm, dm, eps, src, dst, hp = args
        m = y.shape[0] // 2
        n = m - 1
        out = np.empty_like(y)
        _star_block(y, out, 0, n, bp, sp, dp)
        _star_block(y, out, m, n, bm, sm, dm)
        if eps != 0.0:
            for e in range(src.shape[0]):
                i = src[e]
                j = dst[e]
                out[i] += eps * h(y[i] - y[m + j], hp)
                out[m + i] += eps * h(y[m + i] - y[j], hp)
        return out

    if compiled:
        return numba.njit(field)
    field.__name__ = "coupled_stars_python"
    return field


@njit
def complex_network(t, y, args):
    # dphi_i = k_i + sigma * sum_j A_ij sin(phi_j - phi_i + delta), CSR adjacency
    degrees, indptr, indices, sigma, delta = args
    n = y.shape[0]
    out = np.empty_like(y)
    for i in range(n):
        acc = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            acc += math.sin(y[indices[p]] - y[i] + delta)
        out[i] = degrees[i] + sigma * acc
    return out


@njit
def coupled_networks(t, y, args):
    """Two copies of the network field with vertex-to-vertex KS coupling."""
    degrees, indptr, indices, sigma, delta, eps = args
    n = y.shape[0] // 2
    out = np.empty_like(y)
    for c in range(2):
        o = c * n
        q = (1 - c) * n
        for i in range(n):
            acc = 0.0
            for p in range(indptr[i], indptr[i + 1]):
                acc += math.sin(y[o + indices[p]] - y[o + i] + delta)
            out[o + i] = degrees[i] + sigma * acc + eps * math.sin(y[q + i] - y[o + i] + delta)
    return out


@njit
def slow_fast_polar(t, y, args):
    # (r, eta) in the slow time tau = beta*t
    beta, sigma, delta = args
    r = y[0]
    eta = y[1]
    out = np.empty(2)
    eps = 1.0 / beta
    out[0] = eps * 0.5 * sigma * (1.0 - r * r) * math.cos(eta - delta)
    g1 = 1.0 - 0.5 * sigma * (1.0 + r * r) / r * math.sin(eta - delta)
    out[1] = -1.0 - sigma * r * math.sin(eta + delta) + eps * g1
    return out


class DomainError(ValueError):
    """Möbius parameter outside the open unit disk."""


class DomainExitError(DomainError):
    """|α| reached the edge of the chart during integration (onset of synchrony)."""


@njit
def _mobius_mean(ar, ai, psi, theta):
    # z = mean of (α + u)/(1 + conj(α) u), u = e^{i(ψ+θ_j)}
    a = complex(ar, ai)
    ac = complex(ar, -ai)
    s = 0j
    for j in range(theta.shape[0]):
        u = complex(math.cos(psi + theta[j]), math.sin(psi + theta[j]))
        s += (a + u) / (1.0 + ac * u)
    return s / theta.shape[0]


@njit
def _ws_velocity(ar, ai, z, beta, sigma, delta, extra, out, o):
    a = complex(ar, ai)
    f = -sigma * complex(math.cos(delta), -math.sin(delta)) / 2j
    g = 1.0 - beta - sigma * beta * (z * complex(math.cos(delta), math.sin(delta))).imag + extra
    da = 1j * (f * a * a + g * a + f.conjugate())
    out[o] = da.real
    out[o + 1] = da.imag
    out[o + 2] = (f * a + f.conjugate() * a.conjugate()).real + g


@njit
def ws_star(t, y, args):
    # y = (Re α, Im α, ψ); closure 0: exact z over theta, 1: z = α
    beta, sigma, delta, theta, closure, edge = args
    if y[0] * y[0] + y[1] * y[1] >= edge * edge:
        raise DomainExitError("|alpha| reached the chart boundary 1 - 1e-9")
    out = np.empty(3)
    z = complex(y[0], y[1]) if closure == 1 else _mobius_mean(y[0], y[1], y[2], theta)
    _ws_velocity(y[0], y[1], z, beta, sigma, delta, 0.0, out, 0)
    return out


@njit
def ws_hub_coupled(t, y, args):
    # y = (Re α+, Im α+, ψ+, Re α-, Im α-, ψ-, Γ); hub coupling ε sin(φ0^∓ − φ0^± + δc)
    bp, sp, dp, bm, sm, dm, eps, dc, thp, thm, edge = args
    if y[0] * y[0] + y[1] * y[1] >= edge * edge or y[3] * y[3] + y[4] * y[4] >= edge * edge:
        raise DomainExitError("|alpha| reached the chart boundary 1 - 1e-9")
    out = np.empty(7)
    fp = eps * math.sin(-y[6] + dc)
    fm = eps * math.sin(y[6] + dc)
    zp = _mobius_mean(y[0], y[1], y[2], thp)
    zm = _mobius_mean(y[3], y[4], y[5], thm)
    _ws_velocity(y[0], y[1], zp, bp, sp, dp, -fp, out, 0)
    _ws_velocity(y[3], y[4], zm, bm, sm, dm, -fm, out, 3)
    out[6] = (bp - bm + sp * bp * (zp * complex(math.cos(dp), math.sin(dp))).imag
              - sm * bm * (zm * complex(math.cos(dm), math.sin(dm))).imag + fp - fm)
    return out
