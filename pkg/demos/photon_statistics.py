"""Photon statistics of the three light sources and what the idler bank reveals.

The mimic ensemble (coherent pulses with exponentially distributed
intensity) has the same photon-number law as thermal light, so g2(0) = 2,
while a fixed-intensity laser shows g2(0) = 1. Conditioning a two-mode
squeezed vacuum on idler clicks reshapes the signal distribution but, on
average over the click patterns, leaves the thermal law untouched.
"""
from __future__ import annotations

import numpy as np

from qimimic.photonstats import (
    ClickPattern,
    conditional_signal_pmf,
    empirical_pmf,
    g2_zero,
    idler_pattern_marginal,
    poisson_pmf,
    sample_mimic_photon_counts,
    thermal_pmf,
)


def main() -> None:
    n_bar, eta = 0.5, 0.9
    rng = np.random.default_rng(1)

    thermal = thermal_pmf(n_bar)
    mimic = empirical_pmf(sample_mimic_photon_counts(n_bar, rng, 1_000_000))
    laser = poisson_pmf(n_bar)
    print(f"g2(0): thermal {g2_zero(thermal):.4f}, mimic sample {g2_zero(mimic):.4f}, laser {g2_zero(laser):.4f}")

    print("\n n   thermal   mimic(sample)  laser")
    for n in range(5):
        print(f"{n:2d}  {thermal.probs[n]:.5f}   {mimic.probs[n]:.5f}        {laser.probs[n]:.5f}")

    # one idler detector: the signal given "no click" and given "click"
    for mask, label in ((0, "no idler click"), (1, "idler click")):
        pat = ClickPattern(mask, 1)
        cond = conditional_signal_pmf(n_bar, eta, 1, pat)
        w = idler_pattern_marginal(n_bar, eta, 1, pat)
        print(f"\n{label}: probability {w:.4f}, conditional mean {cond.mean():.4f}, g2 {g2_zero(cond):.3f}")

    # averaging the conditional laws over all patterns gives back the thermal law
    N = 4
    avg = np.zeros(thermal.probs.size)
    for mask in range(2**N):
        pat = ClickPattern(mask, N)
        cond = conditional_signal_pmf(n_bar, eta, N, pat).probs
        k = min(cond.size, avg.size)
        avg[:k] += idler_pattern_marginal(n_bar, eta, N, pat) * cond[:k]
    print(f"\nN = {N} idler detectors: max |pattern average - thermal| = {np.max(np.abs(avg - thermal.probs)):.1e}")


if __name__ == "__main__":
    main()
