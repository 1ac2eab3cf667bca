"""Space-like decay along the calibrated cone edge for one config.

Usage: python3 scripts/spatial_tails.py scripts/configs/gamma1.json
"""

import sys

import numpy as np

from kfplab import evolution as evo
from kfplab import rates
from kfplab.cli import build_ops
from kfplab.config import load_config


def main(path: str) -> None:
    cfg = load_config(path)
    ops = build_ops(cfg)
    space = evo.SpaceGrid(cfg.l_x, cfg.n_x)
    f0 = evo.initial_field(cfg.initial, ops, space, cfg.seed)
    fields = evo.evolve_field(ops, space, f0, cfg.snapshot_times())
    M = evo.calibrate_wave_speed(ops, fields)
    print(f"calibrated M = {M:.4f}, predicted q = {rates.predicted_spatial_q(cfg.gamma):.4f}")
    for factor in (0.8, 0.9, 1.0, 1.1, 1.25):
        fit = rates.spatial_tail_fit(ops, fields, factor * M, cfg.gamma)
        print(f"  M x {factor:<4}: q = {fit.exponent:.3f} from {fit.extra.get('points', 0)} points")


if __name__ == "__main__":
    main(sys.argv[1])
