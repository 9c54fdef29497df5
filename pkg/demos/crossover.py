"""Single-pulse comparison of the mimic protocol with TMSV and one idler detector.

Prints both average posteriors across mean photon numbers and the smallest
mean photon number at which the mimic protocol wins, across backgrounds.
"""
from __future__ import annotations

import numpy as np

from qimimic.analytic import crossover_curve, n_min_crossover, p_dm_average, p_rc_average
from qimimic.model import SystemParams

print(" n_bar    mimic      TMSV-1")
for n_bar in (0.25, 0.5, 1.0, 1.04, 2.0, 5.0):
    p = SystemParams(eta=0.9, kappa=0.1, n_bar=n_bar, n_bar_B=3.0)
    print(f"{n_bar:5.2f}  {p_rc_average(p):.7f}  {p_dm_average(p):.7f}")

print(f"\nn_min at n_B = 3: kappa 0.1 -> {n_min_crossover(0.9, 0.1, 3.0):.4f}, "
      f"kappa 1e-3 -> {n_min_crossover(0.9, 1e-3, 3.0):.4f}")

for eta in (0.9, 0.5):
    print(f"\neta = {eta}")
    for pt in crossover_curve(eta, 0.1, np.geomspace(0.01, 30, 8)):
        print(f"  n_B {pt.n_bar_B:8.3f}  n_min {pt.n_min:.4f}  {pt.status}")
