"""Ensemble-averaged posterior curves and shots to a confidence level.

Runs the object-present comparison at 200 runs (a few seconds) and reports
how many pulses each protocol needs before its mean posterior passes 0.8.
The thread count does not change any number printed here.
"""
from __future__ import annotations

from qimimic.mc import ensemble_average, make_grid, shots_to_confidence
from qimimic.model import Scenario, SystemParams, parse_protocol

params = SystemParams(eta=0.9, kappa=0.1, n_bar=1.0, n_bar_B=3.0)
grid = make_grid(30_000, stride=100)
scenario = Scenario.present(params.kappa)

curves = []
for i, name in enumerate(("mimic", "fixed", "tmsv:1", "tmsv:4")):
    curves.append(ensemble_average(parse_protocol(name), params, scenario, 200, 30_000, 100 + i, grid=grid))

for c in curves:
    reach = shots_to_confidence(c, 0.8)
    print(f"{c.label:>7}: mean posterior at 10000 = {c.at(10_000):.3f}, at 30000 = {c.at(30_000):.3f} "
          f"(+- {c.stderr[-1]:.3f}); reaches 0.8 after {reach} pulses")
