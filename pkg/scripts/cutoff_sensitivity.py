"""Sensitivity of nu0, a_gamma and the spectral gap to the cutoff knobs.

Usage: python3 scripts/cutoff_sensitivity.py [gamma]
"""

import sys

import numpy as np

from kfplab import spectral as spec
from kfplab import velocity_ops as vo

GRIDS = {2.0: (10.0, 201), 1.0: (30.0, 301), 0.5: (160.0, 401)}


def main(gamma: float) -> None:
    v_max, n = GRIDS[gamma]
    grid = vo.build_grid(v_max, n)
    print("strength radius   nu0      lambda_coerc  a_gamma    tau[delta,5]")
    for strength in (1.0, 10.0, 100.0):
        for radius in (1.0, 4.0, 8.0):
            ops = vo.build_operators(grid, vo.PotentialParams(gamma, cutoff_radius=radius, cutoff_strength=strength))
            a = spec.diffusion_coefficient(ops).a_gamma
            delta = spec.default_delta(ops)
            tau, _, _ = spec.gap_scan(ops, [[e] for e in np.linspace(delta, 5.0, 9)], delta)
            print(f"{strength:8g} {radius:6g}   {vo.coercivity_constant(ops):.5f}  "
                  f"{vo.lambda_coercivity(ops):.5f}       {a:.6g}   {tau:.5f}")


if __name__ == "__main__":
    main(float(sys.argv[1]) if len(sys.argv) > 1 else 2.0)
