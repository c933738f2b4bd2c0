"""How well α stands in for the order parameter when the constants θ are uniform."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import ContractError
from ..ws import order_parameter_ws, splay_angles
from .rng import stream

TWO_PI = 2.0 * math.pi


@dataclass
class ZAlphaTable:
    n_values: np.ndarray
    sup_deviation: np.ndarray
    r_disk: float
    theta_jitter: float = 0.0
    sparse_k: int = 0
    log_slope: float = math.nan
    bounds: np.ndarray | None = None

    def rows(self) -> list[dict]:
        out = []
        for i, n in enumerate(self.n_values):
            row = {"n": int(n), "sup_deviation": float(self.sup_deviation[i]), "log_slope": self.log_slope}
            if self.bounds is not None:
                row["bound"] = float(self.bounds[i])
            out.append(row)
        return out


def uniform_deviation(n: int, alpha: complex, psi: float) -> float:
    return abs(order_parameter_ws(complex(alpha), psi, splay_angles(n)) - alpha)


def lipschitz_bound(r_disk: float, jitter: float) -> float:
    """Shift of z when every θ moves by at most ``jitter`` (|dM/dθ| ≤ (1+r)/(1−r))."""
    return jitter * (1 + r_disk) / (1 - r_disk)


def verify_z_alpha(n_values, r_disk: float, samples: int = 400, seed: int = 0, *,
                   theta_jitter: float = 0.0, sparse_k: int = 0) -> ZAlphaTable:
    """Sup over random (α, ψ), |α| ≤ r_disk, of |z(α, ψ, θ) − α| for each N.

    θ is the splay set, optionally jittered by uniform noise in
    [0, theta_jitter) or with ``sparse_k`` entries replaced by arbitrary
    angles.  The fitted slope of log(sup) against N is stored; for the pure
    splay set it approaches log(r_disk).  ``bounds`` holds the a-priori
    limit for the variant: the pure-splay value plus the Lipschitz term, or
    plus 2k/N (each replaced term moves the mean by at most 2/N).
    """
    if not 0 < r_disk < 1:
        raise ContractError("r_disk must lie in (0, 1)")
    ns = np.asarray(list(n_values), dtype=int)
    if np.any(ns < 1):
        raise ContractError("N values must be positive")
    if sparse_k and np.any(sparse_k > ns):
        raise ContractError("sparse_k exceeds N")
    rng = stream(seed, "z-alpha")
    # half the draws on the rim, where the deviation is largest
    rad = r_disk * np.sqrt(rng.uniform(size=samples))
    rad[: samples // 2] = r_disk
    alphas = rad * np.exp(1j * rng.uniform(0, TWO_PI, samples))
    psis = rng.uniform(0, TWO_PI, samples)
    sup = np.empty(ns.size)
    bounds = np.empty(ns.size)
    for i, n in enumerate(ns):
        th0 = splay_angles(n)
        th = th0.copy()
        if theta_jitter > 0:
            th = th + rng.uniform(0, theta_jitter, n)
        if sparse_k:
            idx = rng.choice(n, size=sparse_k, replace=False)
            th[idx] = rng.uniform(0, TWO_PI, sparse_k)
        dev = [abs(order_parameter_ws(a, p, th) - a) for a, p in zip(alphas, psis)]
        base = [abs(order_parameter_ws(a, p, th0) - a) for a, p in zip(alphas, psis)]
        sup[i] = max(dev)
        bounds[i] = max(base) + lipschitz_bound(r_disk, theta_jitter) + 2.0 * sparse_k / n
    tab = ZAlphaTable(ns, sup, r_disk, theta_jitter, sparse_k, bounds=bounds)
    ok = sup > 1e-300
    if ok.sum() >= 2:
        tab.log_slope = float(np.polyfit(ns[ok], np.log(sup[ok]), 1)[0])
    return tab
