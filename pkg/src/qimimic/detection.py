"""Signal-detector click probabilities for every protocol and hypothesis.

The object is a beam splitter of reflectance ``kappa`` whose other port
carries thermal light, so that ``n_bar_B`` background photons reach the
detector; the detector is a threshold detector of efficiency ``eta``.

With ``Z = 1 + eta n_bar_B`` and ``gamma = eta kappa / Z``:

* no object:                 P(no click)            = 1 / Z
* object, coherent pulse:    P(no click | lambda)   = exp(-gamma lambda) / Z
* object, n-photon pulse:    P(no click | n)        = x**n / Z, x = 1 - eta kappa / Z

Click probabilities are formed as ``((Z - 1) + (1 - no-click numerator)) / Z``
so that they keep full relative precision when both pieces are tiny.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .model import SystemParams
from .photonstats import (
    ClickPattern,
    DegeneratePatternError,
    click_count_marginal,
    pattern_terms,
    thermal_pmf,
)


class Hypothesis(Enum):
    PRESENT = "present"
    ABSENT = "absent"


class QuadratureError(RuntimeError):
    """A numerical oracle failed to converge."""


@dataclass(frozen=True)
class ChannelConstants:
    """Per-parameter-set constants of the signal channel."""

    Z: float
    gamma: float
    x: float
    background_click: float  # 1 - 1/Z, computed without cancellation

    @classmethod
    def from_values(cls, eta: float, kappa: float, n_bar_B: float) -> "ChannelConstants":
        Z = 1.0 + eta * n_bar_B
        gamma = eta * kappa / Z
        return cls(Z=Z, gamma=gamma, x=1.0 - gamma, background_click=eta * n_bar_B / Z)

    @classmethod
    def from_params(cls, params: SystemParams, kappa: float | None = None) -> "ChannelConstants":
        k = params.kappa if kappa is None else kappa
        return cls.from_values(params.eta, k, params.n_bar_B)


def p_noclick_background(eta: float, n_bar_B: float) -> float:
    """No-click probability with thermal background only."""
    return 1.0 / (1.0 + eta * n_bar_B)


def p_noclick_object_coherent(eta: float, kappa: float, n_bar_B, lam):
    """No-click probability for a coherent pulse of mean photon number ``lam``."""
    Z = 1.0 + eta * np.asarray(n_bar_B, dtype=float)
    return (np.exp(-eta * kappa * np.asarray(lam, dtype=float) / Z) / Z)[()]


def p_click_object_coherent(eta: float, kappa: float, n_bar_B: float, lam):
    """Complement of :func:`p_noclick_object_coherent`, accurate for tiny values."""
    Z = 1.0 + eta * n_bar_B
    return ((eta * n_bar_B - np.expm1(-eta * kappa * np.asarray(lam, dtype=float) / Z)) / Z)[()]


def p_noclick_object_fock(eta: float, kappa: float, n_bar_B: float, n):
    """No-click probability for an ``n``-photon signal pulse with the object present."""
    Z = 1.0 + eta * n_bar_B
    x = 1.0 - eta * kappa / Z
    return (x ** np.asarray(n, dtype=float) / Z)[()]


def effective_background(stray_background: float, dark_prob: float, eta: float) -> float:
    """Fold a per-bin dark-count probability into the mean background photon number.

    A dark count probability ``P_D`` acts like ``P_D / (eta (1 - P_D))``
    extra thermal photons in front of the detector.
    """
    if not 0.0 <= dark_prob < 1.0:
        raise ValueError(f"dark count probability must be in [0, 1) (got {dark_prob})")
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta out of range (got {eta})")
    if stray_background < 0:
        raise ValueError(f"stray background must be >= 0 (got {stray_background})")
    return stray_background + dark_prob / (eta * (1.0 - dark_prob))


# --- TMSV signal detection conditioned on the idler ------------------------


def _pattern_key(pattern) -> tuple[int, int]:
    if isinstance(pattern, ClickPattern):
        return pattern.clicks, pattern.num_detectors
    raise TypeError("pattern must be a ClickPattern")


@dataclass(frozen=True)
class SignalProbabilities:
    """Signal outcome probabilities for one idler click count, object present.

    ``shift`` is P(click | present) - P(click | absent), evaluated directly.
    """

    noclick: float
    click: float
    shift: float
    background_noclick: float
    background_click: float


def tmsv_signal_probabilities(
    params: SystemParams, N: int, clicks: int, kappa: float | None = None
) -> SignalProbabilities:
    """Signal outcome probabilities given a pattern with ``clicks`` idler clicks.

    Averages ``x**n / Z`` over the conditional signal distribution. With
    ``G(y) = 1/(1 + n_bar (1 - y))`` the no-click numerator is
    ``sum c_t G(y_t x)``; the object-induced click excess uses
    ``G(y) - G(y x) = n_bar y (1 - x) / (G(y)^-1 G(y x)^-1)``, which has no
    cancellation for small ``kappa``.
    """
    ch = ChannelConstants.from_params(params, kappa)
    n_bar = params.n_bar
    marginal = click_count_marginal(n_bar, params.eta, N, clicks)
    if not marginal > 0:
        raise DegeneratePatternError(f"idler pattern with {clicks} clicks has probability {marginal}")
    eps = ch.gamma  # 1 - x
    no_terms, deficit_terms = [], []
    for c, y in pattern_terms(clicks, N, params.eta):
        d1 = 1.0 + n_bar * (1.0 - y)
        d2 = 1.0 + n_bar * (1.0 - y * ch.x)
        no_terms.append(c / d2)
        deficit_terms.append(c * n_bar * y * eps / (d1 * d2))
    mean_x = math.fsum(sorted(no_terms, key=abs, reverse=True)) / marginal
    one_minus = math.fsum(sorted(deficit_terms, key=abs, reverse=True)) / marginal
    one_minus = min(max(one_minus, 0.0), 1.0)
    shift = one_minus / ch.Z
    return SignalProbabilities(
        noclick=mean_x / ch.Z,
        click=ch.background_click + shift,
        shift=shift,
        background_noclick=1.0 / ch.Z,
        background_click=ch.background_click,
    )


def tmsv_signal_noclick(
    params: SystemParams, N: int, pattern: ClickPattern, hypothesis: Hypothesis
) -> float:
    """Signal no-click probability given the idler pattern and hypothesis."""
    clicks, n_det = _pattern_key(pattern)
    if n_det != N:
        raise ValueError(f"pattern is for {n_det} detectors, expected {N}")
    if hypothesis is Hypothesis.ABSENT:
        click_count_marginal(params.n_bar, params.eta, N, clicks)  # same validity rules
        return p_noclick_background(params.eta, params.n_bar_B)
    return tmsv_signal_probabilities(params, N, clicks).noclick


def tmsv_noclick_closed_form(params: SystemParams, idler_click: bool) -> float:
    """Single-idler-detector no-click probabilities P(0|i,O) written out explicitly."""
    eta, kappa, n, nb = params.eta, params.kappa, params.n_bar, params.n_bar_B
    if not idler_click:
        return (1 + eta * n) / (1 + eta * (n + nb) + eta * n * (eta * nb + (1 - eta) * kappa))
    m10 = n * (1 - eta) / (1 + eta * n)
    return (1 / (eta * n)) * (
        (1 + eta * n) / (1 + eta * (nb + kappa * n)) - 1 / (1 + eta * (nb + kappa * m10))
    )


# --- oracles ----------------------------------------------------------------


def noclick_oracle_appendixA(
    eta: float,
    kappa: float,
    n_bar_B: float,
    lam: float,
    tol: float = 1e-10,
    max_order: int = 1024,
) -> float:
    """No-click probability by 2-D quadrature of the coherent-state integral.

    The thermal port is written as a Gaussian mixture of coherent amplitudes
    ``beta`` with mean ``m = n_bar_B / (1 - kappa)``; for each ``beta`` the
    detector mode holds the coherent amplitude ``i sqrt(kappa) alpha +
    sqrt(1 - kappa) beta`` and stays dark with probability
    ``exp(-eta |amplitude|^2)``. The complex ``beta`` plane is integrated on a
    tensor Gauss-Hermite grid (rescaled to the Gaussian's width), doubling the
    order until two successive results agree to ``tol``.
    """
    if not 0.0 <= kappa < 1.0:
        raise ValueError("kappa must be in [0, 1)")
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    alpha = math.sqrt(lam)
    if n_bar_B == 0.0:
        return math.exp(-eta * kappa * lam)
    m = n_bar_B / (1.0 - kappa)
    # |beta|^2 carries 1/m from the thermal weight and eta (1 - kappa) from the detector
    sigma = 1.0 / math.sqrt(1.0 / m + eta * (1.0 - kappa))
    prev = None
    order = 8
    while order <= max_order:
        nodes, weights = np.polynomial.hermite.hermgauss(order)
        br = sigma * nodes[:, None]
        bi = sigma * nodes[None, :]
        w2 = weights[:, None] * weights[None, :]
        amp_re = math.sqrt(1.0 - kappa) * br
        amp_im = math.sqrt(kappa) * alpha + math.sqrt(1.0 - kappa) * bi
        beta2 = br**2 + bi**2
        # thermal weight / Gauss-Hermite weight * detector dark probability, in one exponent
        exponent = beta2 / sigma**2 - beta2 / m - eta * (amp_re**2 + amp_im**2)
        value = float(np.sum(w2 * np.exp(exponent)) * sigma**2 / (math.pi * m))
        if prev is not None and abs(value - prev) <= tol:
            return value
        prev = value
        order *= 2
    raise QuadratureError(
        f"Gauss-Hermite quadrature did not converge (eta={eta}, kappa={kappa}, "
        f"n_bar_B={n_bar_B}, lambda={lam})"
    )


def fock_noclick_oracle(
    eta: float, kappa: float, n_bar_B: float, n: int, tail_tol: float = 1e-15
) -> float:
    """No-click probability for an n-photon pulse from an explicit Fock-basis sum.

    The signal ``|n>`` and each Fock component ``|m>`` of the thermal port
    (mean ``n_bar_B / (1 - kappa)``) pass through the object beam splitter and
    the detector's efficiency beam splitter. Tracing to the undetected modes,
    the photons of the two inputs occupy creation operators with norms
    ``p = 1 - eta kappa`` and ``q = 1 - eta (1 - kappa)`` and overlap
    ``|s|^2 = eta^2 kappa (1 - kappa)``. Splitting the second operator into a
    part parallel to the first and an orthogonal remainder of norm
    ``r = (1 - eta) / p`` gives

        P(dark | n, m) = sum_j C(m, j) C(n + j, j) |s|^(2j) p^(n - j) r^(m - j)

    whose terms are all non-negative. The thermal sum is truncated once its
    geometric tail falls below ``tail_tol``.
    """
    from scipy.special import gammaln

    if not 0.0 <= kappa < 1.0:
        raise ValueError("kappa must be in [0, 1)")
    if n < 0:
        raise ValueError("photon number must be >= 0")
    p = 1.0 - eta * kappa
    s2 = eta * eta * kappa * (1.0 - kappa)
    r = (1.0 - eta) / p
    thermal = thermal_pmf(n_bar_B / (1.0 - kappa), tail_tol)
    total = []
    log_p = math.log(p)
    for m, weight in enumerate(thermal.probs):
        j = np.arange(m + 1, dtype=float)
        log_terms = (
            gammaln(m + 1.0) - gammaln(j + 1.0) - gammaln(m - j + 1.0)
            + gammaln(n + j + 1.0) - gammaln(j + 1.0) - gammaln(n + 1.0)
            + (n - j) * log_p
        )
        if s2 > 0:
            log_terms = log_terms + j * math.log(s2)
        else:
            log_terms = np.where(j == 0, log_terms, -np.inf)
        if r > 0:
            log_terms = log_terms + (m - j) * math.log(r)
        else:
            log_terms = np.where(j == m, log_terms, -np.inf)
        total.append(weight * math.fsum(np.exp(log_terms)))
    return math.fsum(total)
