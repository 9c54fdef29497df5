"""Photon-number statistics for the signal mode.

Thermal and Poisson distributions, the random-intensity sampler, click
patterns of a balanced bank of N idler threshold detectors, and the signal
distribution conditioned on such a pattern.

Every pattern probability reduces to signed sums of the thermal generating
function ``sum_n p(n) y**n = 1 / (1 + m (1 - y))``; see
:func:`pattern_terms`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

DEFAULT_TAIL_TOL = 1e-12
MAX_IDLER_DETECTORS = 16


class DegeneratePatternError(ValueError):
    """Raised when conditioning on a click pattern of zero probability."""


@dataclass(frozen=True)
class PhotonDistribution:
    """Truncated photon-number distribution.

    ``probs[n]`` is P(n) for ``n = 0..cutoff``; ``tail_mass`` bounds the
    probability of ``n > cutoff`` from above.
    """

    probs: np.ndarray
    tail_mass: float

    @property
    def cutoff(self) -> int:
        return len(self.probs) - 1

    def moment(self, order: int) -> float:
        n = np.arange(len(self.probs), dtype=float)
        return float(np.dot(n**order, self.probs))

    def mean(self) -> float:
        return self.moment(1)


@dataclass(frozen=True)
class ClickPattern:
    """Which of the N idler detectors fired, as a bitmask."""

    fired: int
    num_detectors: int

    def __post_init__(self) -> None:
        if not 1 <= self.num_detectors <= MAX_IDLER_DETECTORS:
            raise ValueError(
                f"num_detectors must be in 1..{MAX_IDLER_DETECTORS} (got {self.num_detectors})"
            )
        if self.fired < 0 or self.fired >> self.num_detectors:
            raise ValueError(f"detector index out of range in pattern {self.fired:#b}")

    @classmethod
    def from_indices(cls, indices, num_detectors: int) -> "ClickPattern":
        mask = 0
        for i in indices:
            if not 0 <= i < num_detectors:
                raise ValueError(f"detector index {i} out of range for N={num_detectors}")
            mask |= 1 << i
        return cls(mask, num_detectors)

    @property
    def clicks(self) -> int:
        return bin(self.fired).count("1")

    def indices(self) -> List[int]:
        return [i for i in range(self.num_detectors) if self.fired >> i & 1]


def _geometric_cutoff(ratio: float, tail_tol: float) -> int:
    """Smallest K with ratio**K <= tail_tol."""
    if ratio <= 0.0:
        return 1
    return max(1, int(math.ceil(math.log(tail_tol) / math.log(ratio))))


def thermal_pmf(m_bar: float, tail_tol: float = DEFAULT_TAIL_TOL) -> PhotonDistribution:
    """Thermal (Bose-Einstein) distribution with mean ``m_bar``."""
    if m_bar < 0:
        raise ValueError(f"m_bar must be >= 0 (got {m_bar})")
    if m_bar == 0:
        return PhotonDistribution(np.array([1.0]), 0.0)
    q = m_bar / (1.0 + m_bar)
    cutoff = _geometric_cutoff(q, tail_tol)
    n = np.arange(cutoff)
    probs = np.exp(n * math.log(q)) / (1.0 + m_bar)
    return PhotonDistribution(probs, q**cutoff)


def _poisson_tail_bound(lam: float, k: int) -> float:
    # Chernoff: P(X >= k) <= exp(-lam) (e lam / k)^k for k > lam
    return math.exp(-lam + k * (1.0 + math.log(lam / k)))


def poisson_pmf(lam: float, tail_tol: float = DEFAULT_TAIL_TOL) -> PhotonDistribution:
    """Poisson distribution with mean ``lam``."""
    if lam < 0:
        raise ValueError(f"lambda must be >= 0 (got {lam})")
    if lam == 0:
        return PhotonDistribution(np.array([1.0]), 0.0)
    k = int(math.floor(lam)) + 1
    while _poisson_tail_bound(lam, k) > tail_tol:
        k += 1 + k // 16
    n = np.arange(k)
    from scipy.special import gammaln

    probs = np.exp(-lam + n * math.log(lam) - gammaln(n + 1.0))
    return PhotonDistribution(probs, _poisson_tail_bound(lam, k))


def thermal_geometric_sum(m_bar, y):
    """``sum_n p_thermal(n) * y**n`` in closed form, ``1 / (1 + m_bar (1 - y))``."""
    return 1.0 / (1.0 + m_bar * (1.0 - np.asarray(y, dtype=float)))[()]


def sample_mimic_intensity(n_bar: float, rng: np.random.Generator, size=None):
    """Draw pulse intensities from the exponential law with mean ``n_bar``.

    Only the intensity is drawn: the phase never enters a click probability.
    """
    if not n_bar > 0:
        raise ValueError(f"n_bar must be > 0 (got {n_bar})")
    return rng.exponential(n_bar, size)


def idler_silent_prob(j: int, N: int, eta: float, n_photons):
    """Probability that a given set of ``j`` of the N idler detectors stays dark.

    With ``n`` idler photons each photon independently avoids those detectors
    with probability ``1 - eta * j / N``.
    """
    if not 0 <= j <= N:
        raise ValueError(f"need 0 <= j <= N (got j={j}, N={N})")
    return (1.0 - eta * j / N) ** np.asarray(n_photons)


def pattern_terms(clicks: int, N: int, eta: float) -> List[Tuple[float, float]]:
    """Inclusion-exclusion expansion of P(exact pattern | n photons).

    Returns ``(coefficient, y)`` pairs such that the probability that a
    specific set of ``clicks`` detectors fire while the rest stay dark equals
    ``sum(c * y**n)``.
    """
    if not 1 <= N <= MAX_IDLER_DETECTORS:
        raise ValueError(f"N must be in 1..{MAX_IDLER_DETECTORS} (got {N})")
    if not 0 <= clicks <= N:
        raise ValueError(f"clicks must be in 0..N (got {clicks})")
    silent = N - clicks
    return [
        ((-1.0) ** t * math.comb(clicks, t), 1.0 - eta * (silent + t) / N)
        for t in range(clicks + 1)
    ]


def _signed_sum(values) -> float:
    # largest magnitudes first keeps the cancellation error near one ulp of the largest term
    ordered = sorted(values, key=abs, reverse=True)
    return math.fsum(ordered)


def _pattern_count(pattern) -> Tuple[int, int]:
    if isinstance(pattern, ClickPattern):
        return pattern.clicks, pattern.num_detectors
    raise TypeError("pattern must be a ClickPattern")


def idler_pattern_marginal(n_bar: float, eta: float, N: int, pattern: ClickPattern) -> float:
    """Probability of the exact click pattern, averaged over the thermal idler."""
    k, n_det = _pattern_count(pattern)
    if n_det != N:
        raise ValueError(f"pattern is for {n_det} detectors, expected {N}")
    return click_count_marginal(n_bar, eta, N, k)


def click_count_marginal(n_bar: float, eta: float, N: int, clicks: int) -> float:
    """Probability of one specific pattern with ``clicks`` fired detectors."""
    return _signed_sum(c * thermal_geometric_sum(n_bar, y) for c, y in pattern_terms(clicks, N, eta))


def click_count_distribution(n_bar: float, eta: float, N: int) -> np.ndarray:
    """P(exactly k detectors fire) for k = 0..N."""
    return np.array(
        [math.comb(N, k) * click_count_marginal(n_bar, eta, N, k) for k in range(N + 1)]
    )


def sample_click_patterns(
    n_bar: float, eta: float, N: int, rng: np.random.Generator, size: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Draw idler click patterns.

    The number of clicks comes from :func:`click_count_distribution`; which
    detectors fired is then assigned uniformly. Returns ``(counts, masks)``.
    """
    cdf = np.cumsum(click_count_distribution(n_bar, eta, N))
    cdf[-1] = 1.0
    counts = np.searchsorted(cdf, rng.random(size), side="right").astype(np.int64)
    if N == 1:
        return counts, counts.copy()
    order = np.argsort(rng.random((size, N)), axis=1)
    chosen = np.arange(N)[None, :] < counts[:, None]
    bits = np.where(chosen, np.left_shift(1, order), 0)
    return counts, bits.sum(axis=1).astype(np.int64)


def conditional_signal_pmf(
    n_bar: float,
    eta: float,
    N: int,
    pattern: ClickPattern,
    tail_tol: float = DEFAULT_TAIL_TOL,
) -> PhotonDistribution:
    """Signal photon-number distribution given an idler click pattern."""
    k, n_det = _pattern_count(pattern)
    if n_det != N:
        raise ValueError(f"pattern is for {n_det} detectors, expected {N}")
    marginal = click_count_marginal(n_bar, eta, N, k)
    if not marginal > 0:
        raise DegeneratePatternError(
            f"pattern with {k} clicks has probability {marginal} (n_bar={n_bar}, eta={eta})"
        )
    # P(pattern|n) <= 1, so the conditional tail is at most the thermal tail / marginal
    base = thermal_pmf(n_bar, tail_tol * min(1.0, marginal))
    n = np.arange(len(base.probs))
    likelihood = np.zeros(len(n))
    for c, y in sorted(pattern_terms(k, N, eta), key=lambda cy: -abs(cy[0])):
        likelihood += c * y**n
    likelihood = np.clip(likelihood, 0.0, 1.0)
    return PhotonDistribution(base.probs * likelihood / marginal, base.tail_mass / marginal)


def g2_zero(dist: PhotonDistribution) -> float:
    """Zero-delay second-order coherence <n(n-1)>/<n>^2."""
    mean = dist.mean()
    if not mean > 0:
        raise ValueError("g2 undefined for a distribution with zero mean")
    n = np.arange(len(dist.probs), dtype=float)
    return float(np.dot(n * (n - 1.0), dist.probs) / mean**2)


def empirical_pmf(counts: np.ndarray) -> PhotonDistribution:
    """Histogram of observed photon counts as a distribution (no tail)."""
    hist = np.bincount(np.asarray(counts, dtype=np.int64))
    return PhotonDistribution(hist / hist.sum(), 0.0)


def sample_mimic_photon_counts(n_bar: float, rng: np.random.Generator, size: int) -> np.ndarray:
    """Photon counts of random-intensity pulses: Poisson draws at sampled intensities."""
    return rng.poisson(sample_mimic_intensity(n_bar, rng, size))


def mixture_pmf_quadrature(n_bar: float, n: int) -> float:
    """P(n) of the intensity-mixed Poisson ensemble by direct quadrature.

    Integrates the exponential intensity density against the Poisson weight;
    must equal the thermal distribution with mean ``n_bar``.
    """
    from scipy import integrate
    from scipy.special import gammaln

    def integrand(lam: float) -> float:
        if lam == 0.0:
            return 1.0 / n_bar if n == 0 else 0.0
        return math.exp(-lam / n_bar - lam + n * math.log(lam) - gammaln(n + 1.0)) / n_bar

    peak = max(n * n_bar / (1.0 + n_bar), 1e-3)
    value, _ = integrate.quad(
        integrand, 0.0, 50.0 * (peak + n_bar + 1.0),
        points=[peak], epsabs=1e-15, epsrel=1e-12, limit=500,
    )
    return value


def conditional_means_single_detector(n_bar: float, eta: float) -> Tuple[float, float]:
    """Mean signal photon number after no click / a click on a single idler detector."""
    no_click = n_bar * (1.0 - eta) / (1.0 + eta * n_bar)
    click = n_bar + (1.0 + n_bar) / (1.0 + eta * n_bar)
    return no_click, click
