"""Large-β averaging: the slow radius of α follows a one-dimensional flow.

Compares the true polar dynamics with the averaged equation and shows the
error shrinking like 1/β, so β·error stays roughly constant.
"""

from __future__ import annotations

from starchimera.averaging import averaged_field, compare_averaged, p_function, q_function, r_function
from starchimera.core import StarParams


def main() -> None:
    for x in (0.1, 0.5, 0.9):
        print(f"x={x}: P={p_function(x):.6f} Q={q_function(x):.6f} R={r_function(x):.6f}")
    f1 = averaged_field(StarParams(100.0, 0.5, 0.3, 1))
    print(f"averaged field slope at 0: {f1.slope_at_zero:.6f}")
    for beta in (50.0, 100.0, 200.0, 400.0):
        err, c = compare_averaged(StarParams(beta, 0.5, 0.3, 1), 0.3, 10 * beta)
        print(f"beta={beta:5.0f}: sup|r - rho| = {err:.2e}, beta * error = {c:.4f}")


if __name__ == "__main__":
    main()
