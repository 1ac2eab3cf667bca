"""Short-wave decay law for weak confinement: best stretched exponent per mode.

For each short-wave mode the norm of e^{t L_eta} applied to sqrt(M) (and to an
oscillating profile) is fitted by log y = c0 - c t^q over a wide q range on
two windows. Usage: python3 scripts/shortwave_q_scan.py [gamma]
"""

import sys

import numpy as np

from kfplab import evolution as evo
from kfplab import rates
from kfplab import velocity_ops as vo


def main(gamma: float) -> None:
    ops = vo.build_operators(vo.build_grid(160.0, 801), vo.PotentialParams(gamma))
    times = np.arange(0, 40.001, 0.5)
    osc = ops.sqrtM * (1 + 0.5 * np.sqrt(ops.grid.speed) * np.cos(ops.grid.axis))
    q_ref = gamma / (2 - gamma)
    for label, f0 in (("sqrt(M)", ops.sqrtM), ("oscillating", osc / ops.norm(osc))):
        for eta in (1.0, 1.5, 3.0):
            rows = evo.ModePropagator(ops, [eta]).exact(f0.astype(complex), times)
            y = np.sqrt(np.sum(ops.weights * np.abs(rows) ** 2, axis=1))
            for lo, hi in ((5, 20), (10, 40)):
                m = (times >= lo) & (times <= hi) & (y > rates.NOISE_FLOOR)
                if m.sum() < 8:
                    print(f"{label:12s} eta={eta:<4} [{lo},{hi}] below the noise floor")
                    continue
                cert = rates.certify_q(times[m], y[m], q_ref, lo=0.1, hi=5.0 / q_ref, n=300)
                print(f"{label:12s} eta={eta:<4} [{lo},{hi}] best q {cert['best_q']:.3f}, "
                      f"residual at q={q_ref:.3f} / min = {cert['ratio']:.2f}")


if __name__ == "__main__":
    main(float(sys.argv[1]) if len(sys.argv) > 1 else 0.5)
