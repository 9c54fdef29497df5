"""Per-pulse click probabilities at the signal detector.

Shows the background-only and object-present no-click probabilities for a
coherent pulse, the Fock-state form and its Poisson mixture, the two
single-idler-detector TMSV conditionals, and folding a dark-count
probability into an equivalent thermal background.
"""
from __future__ import annotations

import math

import numpy as np

from qimimic.detection import (
    Hypothesis,
    effective_background,
    noclick_oracle_appendixA,
    p_noclick_background,
    p_noclick_object_coherent,
    p_noclick_object_fock,
    tmsv_noclick_closed_form,
    tmsv_signal_noclick,
)
from qimimic.model import SystemParams
from qimimic.photonstats import ClickPattern, poisson_pmf

params = SystemParams(eta=0.9, kappa=0.1, n_bar=1.0, n_bar_B=3.0)
eta, kappa, nb = params.eta, params.kappa, params.n_bar_B

print(f"background only:   P(no click) = {p_noclick_background(eta, nb):.6f}")
for lam in (0.5, 1.0, 5.0):
    closed = p_noclick_object_coherent(eta, kappa, nb, lam)
    oracle = noclick_oracle_appendixA(eta, kappa, nb, lam)
    print(f"object, lam = {lam:3}: P(no click) = {closed:.6f}  (phase-space quadrature {oracle:.6f})")

d = poisson_pmf(1.0, 1e-16)
mix = math.fsum(d.probs * p_noclick_object_fock(eta, kappa, nb, np.arange(d.probs.size)))
print(f"Poisson mixture of Fock no-click probabilities at lam = 1: {mix:.12f}")

for click in (False, True):
    composed = tmsv_signal_noclick(params, 1, ClickPattern(int(click), 1), Hypothesis.PRESENT)
    print(f"TMSV, idler {'click' if click else 'no click'}: {composed:.6f} "
          f"(written-out form {tmsv_noclick_closed_form(params, click):.6f})")

print(f"dark-count probability 5e-8 at eta = 0.9 acts like n_B = {effective_background(0.0, 5e-8, 0.9):.4e}")
