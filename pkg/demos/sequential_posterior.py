"""Pulse-by-pulse Bayesian updating, by hand and with the simulator.

A handful of pulses is pushed through the log-odds update explicitly, then
single trajectories are simulated with the object present, absent, and
appearing part-way through.
"""
from __future__ import annotations

from qimimic.bayes import PosteriorState, PulseEvidence, log_likelihood, observe
from qimimic.detection import Hypothesis
from qimimic.mc import RunSeed, simulate_trajectory
from qimimic.model import RandomCoherent, Scenario, SystemParams

params = SystemParams(eta=0.9, kappa=0.1, n_bar=1.0, n_bar_B=3.0)
mimic = RandomCoherent()

state = PosteriorState.from_prior(0.5)
for click, lam in [(True, 2.3), (False, 0.4), (True, 1.1), (False, 3.0), (True, 0.2)]:
    ev = PulseEvidence(click, lam)
    lp = log_likelihood(mimic, params, ev, Hypothesis.PRESENT)
    la = log_likelihood(mimic, params, ev, Hypothesis.ABSENT)
    state = observe(state, mimic, params, ev)
    print(f"{'click   ' if click else 'no click'} lam={lam:3}: log-likelihood ratio {lp - la:+.4f} -> P(present) {state.probability:.4f}")

print()
for label, scenario in (
    ("present", Scenario.present(params.kappa)),
    ("absent", Scenario.absent()),
    ("appears at 10000", Scenario.appear_at(10_000, params.kappa)),
):
    rec = simulate_trajectory(mimic, params, scenario, RunSeed(7, 0), 30_000, stride=5_000)
    trace = "  ".join(f"{p:.3f}" for p in rec.posteriors)
    print(f"{label:>17}: {trace}")
