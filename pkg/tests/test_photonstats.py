import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qimimic.photonstats import (
    ClickPattern,
    DegeneratePatternError,
    click_count_distribution,
    click_count_marginal,
    conditional_means_single_detector,
    conditional_signal_pmf,
    empirical_pmf,
    g2_zero,
    idler_pattern_marginal,
    idler_silent_prob,
    mixture_pmf_quadrature,
    poisson_pmf,
    sample_click_patterns,
    sample_mimic_intensity,
    sample_mimic_photon_counts,
    thermal_geometric_sum,
    thermal_pmf,
)


def all_patterns(N):
    return [ClickPattern(mask, N) for mask in range(2**N)]


# --- distributions -----------------------------------------------------------


def test_thermal_pmf_values():
    assert thermal_pmf(0.0).probs.tolist() == [1.0]
    d = thermal_pmf(1.0)
    np.testing.assert_allclose(d.probs[:3], [0.5, 0.25, 0.125], rtol=1e-15)
    assert abs(thermal_pmf(3.0).mean() - 3.0) < 1e-9


@pytest.mark.parametrize("m", [0.01, 0.5, 3.0, 20.0])
def test_thermal_pmf_tail_certificate(m):
    d = thermal_pmf(m)
    assert d.tail_mass <= 1e-12
    assert abs(d.probs.sum() + d.tail_mass - 1.0) <= 1e-12
    assert np.all(d.probs >= 0)


def test_poisson_pmf_values():
    assert poisson_pmf(0.0).probs.tolist() == [1.0]
    d = poisson_pmf(1.0)
    np.testing.assert_allclose(d.probs[:2], [math.exp(-1), math.exp(-1)], rtol=1e-14)
    assert abs(poisson_pmf(20.0).mean() - 20.0) < 1e-9


@pytest.mark.parametrize("lam", [0.2, 0.7, 12.0, 28.0])
def test_poisson_pmf_tail_certificate(lam):
    d = poisson_pmf(lam)
    assert d.tail_mass <= 1e-12
    assert 1.0 - 1e-12 <= d.probs.sum() + d.tail_mass <= 1.0 + 1e-12


def test_thermal_geometric_sum():
    assert thermal_geometric_sum(2.5, 1.0) == 1.0
    assert thermal_geometric_sum(2.5, 0.0) == pytest.approx(1 / 3.5, rel=1e-15)
    assert thermal_geometric_sum(1.0, 0.5) == pytest.approx(2 / 3, rel=1e-15)
    d = thermal_pmf(1.7)
    n = np.arange(d.probs.size)
    assert math.fsum(d.probs * 0.3**n) == pytest.approx(thermal_geometric_sum(1.7, 0.3), rel=1e-13)


# --- sampler -------------------------------------------------------------------


def test_sampler_mean_and_tail():
    rng = np.random.default_rng(11)
    lam = sample_mimic_intensity(1.0, rng, 1_000_000)
    assert abs(lam.mean() - 1.0) < 3 * 1.0 / math.sqrt(lam.size)
    for n_bar, expected in ((0.5, math.exp(-4)), (1.0, math.exp(-2))):
        tail = np.mean(sample_mimic_intensity(n_bar, rng, 1_000_000) >= 2.0)
        sigma = math.sqrt(expected * (1 - expected) / 1_000_000)
        assert abs(tail - expected) < 4 * sigma
    # quoted rounded values
    assert round(math.exp(-4), 3) == 0.018 and round(math.exp(-2), 3) == 0.135


def test_sampler_rejects_nonpositive_mean():
    with pytest.raises(ValueError):
        sample_mimic_intensity(0.0, np.random.default_rng(0), 3)


@pytest.mark.parametrize("n", list(range(0, 31, 3)))
def test_mixture_identity(n):
    # exponential intensity mixture of Poisson pmfs equals the thermal pmf
    assert mixture_pmf_quadrature(0.8, n) == pytest.approx(thermal_pmf(0.8).probs[n], abs=1e-8)


# --- idler bank ---------------------------------------------------------------


def _silent_enumeration(j, N, eta: Fraction, n):
    """Exact probability that the first j detectors stay silent, by enumerating placements."""
    total = Fraction(0)
    for placement in itertools.product(range(N), repeat=n):
        p = Fraction(1, N**n)
        for d in placement:
            if d < j:
                p *= 1 - eta
        total += p
    return total


@pytest.mark.parametrize("N", [1, 2, 3, 4])
@pytest.mark.parametrize("eta", [Fraction(9, 10), Fraction(1, 2), Fraction(1, 5)])
def test_idler_silent_prob_matches_enumeration(N, eta):
    for n in range(0, 9 if N <= 2 else 7):
        for j in range(N + 1):
            exact = (1 - eta * j / N) ** n
            assert _silent_enumeration(j, N, eta, n) == exact
            assert float(idler_silent_prob(j, N, float(eta), n)) == pytest.approx(float(exact), rel=1e-14)


def test_idler_silent_prob_examples():
    assert idler_silent_prob(0, 3, 0.7, 5) == 1.0
    assert idler_silent_prob(1, 1, 0.9, 3) == pytest.approx(0.1**3, rel=1e-14)
    assert idler_silent_prob(1, 2, 0.9, 2) == pytest.approx(0.3025, rel=1e-15)


def test_single_detector_marginals():
    p0 = idler_pattern_marginal(1.0, 0.9, 1, ClickPattern(0, 1))
    p1 = idler_pattern_marginal(1.0, 0.9, 1, ClickPattern(1, 1))
    assert p0 == pytest.approx(1 / 1.9, rel=1e-15)
    assert p1 == pytest.approx(1 - 1 / 1.9, rel=1e-15)


def test_two_detector_marginal_matches_truncated_sum():
    # multinomial-count enumeration summed over the thermal pmf in 40-digit arithmetic
    # (tests/oracles/compute_frozen.py)
    frozen = 0.1633393829401088929219600725952813
    got = idler_pattern_marginal(1.0, 0.9, 2, ClickPattern.from_indices([0], 2))
    assert got == pytest.approx(frozen, abs=1e-15)
    assert idler_pattern_marginal(1.0, 0.9, 2, ClickPattern.from_indices([1], 2)) == got


@given(n_bar=st.floats(1e-3, 50.0), eta=st.floats(1e-3, 1.0), N=st.integers(1, 6))
def test_pattern_completeness(n_bar, eta, N):
    total = math.fsum(idler_pattern_marginal(n_bar, eta, N, p) for p in all_patterns(N))
    assert total == pytest.approx(1.0, abs=1e-12)
    assert click_count_distribution(n_bar, eta, N).sum() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("N", [1, 2, 4])
@pytest.mark.parametrize("n_bar, eta", [(0.5, 0.9), (20.0, 0.9), (1.0, 0.2), (3.0, 1.0)])
def test_no_signaling_and_mean_bookkeeping(N, n_bar, eta):
    base = thermal_pmf(n_bar, 1e-14)
    avg = np.zeros(base.probs.size)
    mean = []
    for p in all_patterns(N):
        w = idler_pattern_marginal(n_bar, eta, N, p)
        if w <= 1e-300:
            continue
        cond = conditional_signal_pmf(n_bar, eta, N, p, tail_tol=1e-14)
        k = min(cond.probs.size, avg.size)
        avg[:k] += w * cond.probs[:k]
        mean.append(w * cond.mean())
    np.testing.assert_allclose(avg, base.probs, atol=1e-10, rtol=0)
    assert math.fsum(mean) == pytest.approx(n_bar, abs=1e-10 * max(1.0, n_bar))


def test_conditional_means_single_detector():
    no = conditional_signal_pmf(0.5, 0.9, 1, ClickPattern(0, 1))
    yes = conditional_signal_pmf(0.5, 0.9, 1, ClickPattern(1, 1))
    assert no.mean() == pytest.approx(0.5 * 0.1 / 1.45, rel=1e-10)
    assert yes.mean() == pytest.approx(0.5 + 1.5 / 1.45, rel=1e-10)
    m0, m1 = conditional_means_single_detector(0.5, 0.9)
    assert (m0, m1) == pytest.approx((no.mean(), yes.mean()), rel=1e-10)


def test_tiny_efficiency_leaves_signal_thermal():
    d = conditional_signal_pmf(2.0, 1e-12, 3, ClickPattern(0, 3))
    np.testing.assert_allclose(d.probs, thermal_pmf(2.0, d.tail_mass).probs[: d.probs.size], atol=1e-11)


def test_degenerate_pattern_rejected():
    # two clicks at a vanishing mean photon number have zero probability in double precision
    with pytest.raises(DegeneratePatternError):
        conditional_signal_pmf(1e-300, 0.5, 2, ClickPattern(3, 2))


def test_click_pattern_validation():
    assert ClickPattern.from_indices([0, 2], 3).fired == 0b101
    assert ClickPattern(0b101, 3).indices() == [0, 2]
    with pytest.raises(ValueError):
        ClickPattern(0b1000, 3)
    with pytest.raises(ValueError):
        ClickPattern.from_indices([3], 3)
    with pytest.raises(ValueError):
        ClickPattern(0, 17)


def test_sample_click_patterns_frequencies():
    rng = np.random.default_rng(5)
    N, size = 4, 400_000
    counts, masks = sample_click_patterns(2.0, 0.7, N, rng, size)
    popcount = np.array([bin(m).count("1") for m in masks[:2000]])
    assert np.array_equal(popcount, counts[:2000])
    expected = click_count_distribution(2.0, 0.7, N)
    observed = np.bincount(counts, minlength=N + 1) / size
    sigma = np.sqrt(expected * (1 - expected) / size)
    assert np.all(np.abs(observed - expected) < 4 * sigma + 1e-12)
    # each detector equally likely to be among the fired ones
    per_det = np.array([np.mean((masks >> i) & 1) for i in range(N)])
    target = np.sum(np.arange(N + 1) * expected) / N
    assert np.all(np.abs(per_det - target) < 4 * math.sqrt(target / size))


# --- covertness ------------------------------------------------------------------


def test_g2_values():
    assert g2_zero(thermal_pmf(1.0, 1e-15)) == pytest.approx(2.0, abs=1e-10)
    assert g2_zero(poisson_pmf(1.0, 1e-15)) == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(ValueError):
        g2_zero(thermal_pmf(0.0))


def test_mimic_ensemble_g2_is_thermal():
    rng = np.random.default_rng(2024)
    counts = sample_mimic_photon_counts(1.0, rng, 1_000_000)
    g2 = g2_zero(empirical_pmf(counts))
    # spread of this estimator over repeated 1e6-pulse samples is about 0.004
    assert abs(g2 - 2.0) < 0.02
