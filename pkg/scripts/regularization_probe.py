"""Small-time smoothing exponents for every admissible weight.

Usage: python3 scripts/regularization_probe.py [gamma ...]
"""

import sys

import numpy as np

from kfplab import evolution as evo
from kfplab import functionals as fun
from kfplab import rates
from kfplab import velocity_ops as vo

GRIDS = {2.0: (10.0, 201), 1.0: (30.0, 301), 0.5: (160.0, 801)}


def main(gammas) -> None:
    t = np.geomspace(1e-3, 1e-1, 12)
    for gamma in gammas:
        ops = vo.build_operators(vo.build_grid(*GRIDS[gamma]), vo.PotentialParams(gamma))
        for weight in fun.admissible_weights(gamma):
            rows = evo.regularization_probe(ops, t, fun.probe_weight(weight, gamma))
            sv = rates.fit_power_exp(t, [r["grad_v"] for r in rows])
            sx = rates.fit_power_exp(t, [r["grad_x"] for r in rows])
            print(f"gamma={gamma} {weight.kind:6s} grad_v {sv.exponent:+.3f}  grad_x {sx.exponent:+.3f}")


if __name__ == "__main__":
    main([float(g) for g in sys.argv[1:]] or [0.5, 1.0, 2.0])
