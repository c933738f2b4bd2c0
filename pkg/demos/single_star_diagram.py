"""Hysteresis of a single star: sweep σ up from incoherence and back down from synchrony.

The jumps of r should land near the closed-form critical couplings
σ_f (upward) and σ_b (downward).  A coarse σ step keeps this under a
minute; ``starchimera diagram`` runs the fine version.
"""

from __future__ import annotations

import sys
from pathlib import Path

from starchimera.experiments import hysteresis_area, sync_diagram, transition_sigma
from starchimera.experiments.io import plot_svg
from starchimera.ws import critical_couplings


def main(out_dir: str = "demo_output") -> None:
    beta, delta, n = 10.0, 0.3, 100
    sb, sf = critical_couplings(beta, delta)
    print(f"closed form: sigma_b = {sb:.4f}, sigma_f = {sf:.4f}")

    kw = dict(sigma_max=3.0, dsigma=0.05, settle=60.0, measure=30.0, seed=1)
    fwd = sync_diagram(beta, delta, n, "forward", **kw)
    bwd = sync_diagram(beta, delta, n, "backward", **kw)
    print(f"simulated:   jump up at {transition_sigma(fwd, 0.5, True)}, "
          f"drop below {transition_sigma(bwd, 0.5, False)}")
    print(f"loop area {hysteresis_area(fwd, bwd):.3f}")

    out = Path(out_dir)
    out.mkdir(exist_ok=True)
    plot_svg(out / "single_star_diagram.svg",
             [{"x": [p.sigma for p in fwd], "y": [p.r for p in fwd], "label": "forward"},
              {"x": [p.sigma for p in bwd], "y": [p.r for p in bwd], "label": "backward", "style": "s--"}],
             xlabel="sigma", ylabel="r", vlines=(sb, sf), title=f"beta={beta}, delta={delta}, N={n}")


if __name__ == "__main__":
    main(*sys.argv[1:])
