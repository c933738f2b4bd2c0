"""How long a chimera survives as the inter-star coupling ε grows.

A small version of the lifetime study: 16 leaves, 3 seeds, two coupling
families.  The full study is ``starchimera lifetime`` (64 leaves,
10 seeds, 1000 cycles).
"""

from __future__ import annotations

import numpy as np

from starchimera.core import CouplingSpec, StarParams
from starchimera.experiments import cycles, general_h, lifetime_sweep


def main() -> None:
    p = StarParams(200.0, 1.2, 0.3, 16)
    eps = np.geomspace(0.02, 0.1, 3)
    for label, cs in (("general h", CouplingSpec.general(1.0, general_h)),
                      ("sin", CouplingSpec.sinusoidal(1.0, 1.0, 0.0))):
        res = lifetime_sweep(p, p, cs, eps, n_seeds=3, eta=0.25, horizon=cycles(500))
        taus = ", ".join(f"{e:.3f}: {m:.0f}" for e, m in zip(res.epsilons, res.mean))
        print(f"{label:10s} mean lifetime by eps  {taus}  (log-log slope {res.slope:.2f})")


if __name__ == "__main__":
    main()
