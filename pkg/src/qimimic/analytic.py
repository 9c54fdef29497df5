"""Single-pulse average posteriors and the crossover between protocols.

With equal priors and the object present, the posterior after one pulse is
averaged over the pulse choice and the outcome:

* random coherent (mimic) pulses: ``p_rc_average``, a closed form in the
  harmonic function and 2F1(1, b; b+1; A);
* TMSV with one idler detector: ``p_dm_average``, a finite sum over the
  idler and signal outcomes.

``n_min_crossover`` finds the smallest mean photon number at which the
mimic average exceeds the TMSV one.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .detection import ChannelConstants, tmsv_signal_probabilities
from .model import ParameterError, SystemParams
from .photonstats import click_count_marginal
from .specfun import harmonic_diff, hyp2f1_1bA



class NoCrossingError(RuntimeError):
    """P_RC - P_DM does not change sign on the searched interval."""


@dataclass(frozen=True)
class ComparisonConstants:
    """``A = 1/(1 + 2 eta n_B)``, ``beta = Z/(eta kappa n)``, ``C = Z/(1 + 2 eta n_B)``."""

    A: float
    beta: float
    C: float
    Z: float
    one_minus_A: float

    @classmethod
    def from_params(cls, params: SystemParams) -> "ComparisonConstants":
        if params.kappa <= 0.0:
            raise ParameterError("kappa must be > 0 for the analytic comparison")
        eta, nb = params.eta, params.n_bar_B
        Z = 1.0 + eta * nb
        two_z_minus_1 = 1.0 + 2.0 * eta * nb
        return cls(
            A=1.0 / two_z_minus_1,
            beta=Z / (eta * params.kappa * params.n_bar),
            C=Z / two_z_minus_1,
            Z=Z,
            one_minus_A=2.0 * eta * nb / two_z_minus_1,
        )


def rc_average_parts(params: SystemParams) -> Tuple[float, float]:
    """Closed-form no-click and click contributions ``(I0, I1)``.

    ``I0 = beta/(2Z) [H((1 + beta)/2) - H(beta/2)]``.

    ``I1`` is the three-term combination
    ``beta C [F(beta)/beta - 2 F(beta+1)/((beta+1) Z) + F(beta+2)/((beta+2) Z^2)]``
    with ``F(b) = 2F1(1, b; b+1; A)``. Using ``b F(b) = sum_k b A^k / (b + k)``
    termwise, the combination equals

        C u (2 - u) / (beta + 1) + C (1 - u)^2 F(beta),    u = 1/Z,

    a sum of two non-negative terms. The three-term form loses every digit
    when beta is large (the terms are ~1/(1 - A) and cancel to ~1/beta^2),
    so this is the form evaluated; see :func:`rc_click_three_term`.
    """
    k = ComparisonConstants.from_params(params)
    i0 = k.beta / (2.0 * k.Z) * harmonic_diff(k.beta / 2.0, 0.5)
    u = 1.0 / k.Z
    one_minus_u = params.eta * params.n_bar_B / k.Z
    f = hyp2f1_1bA(k.beta, k.A, one_minus_A=k.one_minus_A) if one_minus_u > 0 else 0.0
    i1 = k.C * u * (2.0 - u) / (k.beta + 1.0) + k.C * one_minus_u**2 * f
    return i0, i1


def rc_click_three_term(params: SystemParams) -> float:
    """``I1`` evaluated literally as three hypergeometric terms (small beta only)."""
    k = ComparisonConstants.from_params(params)
    b, Z = k.beta, k.Z

    def F(x: float) -> float:
        return hyp2f1_1bA(x, k.A, one_minus_A=k.one_minus_A)

    return b * k.C * (F(b) / b - 2.0 * F(b + 1) / ((b + 1) * Z) + F(b + 2) / ((b + 2) * Z**2))


def p_rc_average(params: SystemParams) -> float:
    """Average one-pulse posterior of the random-coherent (mimic) protocol."""
    i0, i1 = rc_average_parts(params)
    # the average is >= 1/2 exactly; I0 + I1 can round one ulp below it when kappa n_bar is tiny
    return max(0.5, i0 + i1)


def rc_quadrature_oracle(params: SystemParams, parts: bool = False):
    """``I0 + I1`` by adaptive quadrature over the pulse intensity.

    The integrands are the outcome-weighted Bayes posteriors for a pulse of
    intensity ``lambda``, with ``lambda = n_bar v`` and ``v`` exponentially
    distributed.
    """
    from scipy import integrate

    if params.kappa <= 0.0:
        raise ParameterError("kappa must be > 0 for the analytic comparison")
    ch = ChannelConstants.from_params(params)
    Z, zm1 = ch.Z, params.eta * params.n_bar_B
    rate = ch.gamma * params.n_bar  # gamma * lambda = rate * v

    def f0(v: float) -> float:
        t = math.exp(-rate * v)
        return math.exp(-v) * t * t / (Z * (1.0 + t))

    def f1(v: float) -> float:
        one_minus_t = -math.expm1(-rate * v)
        num = zm1 + one_minus_t  # Z - t
        return math.exp(-v) * num * num / (Z * (2.0 * zm1 + one_minus_t))

    scale = 1.0 / rate
    edges = sorted({0.0, 1.0, 5.0, 20.0, 60.0} | {scale * s for s in (0.1, 1.0, 10.0) if scale * s < 60.0})
    total = []
    for f in (f0, f1):
        acc = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            val, err = integrate.quad(f, lo, hi, epsabs=1e-15, epsrel=1e-13, limit=400)
            if err > 1e-11:
                raise RuntimeError(f"quadrature error estimate {err} too large on [{lo}, {hi}]")
            acc.append(val)
        total.append(math.fsum(acc))
    if parts:
        return total[0], total[1]
    return total[0] + total[1]


def p_dm_average(params: SystemParams) -> float:
    """Average one-pulse posterior of TMSV with a single idler detector.

    Written as ``1/2 + sum_i p(i) d_i^2/4 (1/S_0 + 1/S_1)`` where ``d_i`` is the
    shift of the signal click probability caused by the object and ``S_s`` are
    the summed outcome probabilities; this is algebraically the outcome
    average of ``P(s|i,O)^2 / (P(s|i,O) + P(s|i,absent))`` and keeps full
    precision when the shift is tiny.
    """
    excess = []
    for clicks in (0, 1):
        p_i = click_count_marginal(params.n_bar, params.eta, 1, clicks)
        probs = tmsv_signal_probabilities(params, 1, clicks)
        d = probs.shift
        if d == 0.0:
            continue  # outcome carries no information (and may have zero probability)
        s0 = probs.noclick + probs.background_noclick
        s1 = probs.click + probs.background_click
        excess.append(p_i * d * d / 4.0 * (1.0 / s0 + 1.0 / s1))
    return 0.5 + math.fsum(excess)


def _advantage(eta: float, kappa: float, n_bar_B: float, n_bar: float) -> float:
    p = SystemParams(eta=eta, kappa=kappa, n_bar=n_bar, n_bar_B=n_bar_B)
    return p_rc_average(p) - p_dm_average(p)


def n_min_crossover(
    eta: float,
    kappa: float,
    n_bar_B: float,
    search_interval: Tuple[float, float] = (1e-2, 1e2),
    points_per_decade: int = 32,
    xtol: float = 1e-7,
) -> float:
    """Smallest ``n_bar`` where the mimic average posterior overtakes TMSV-1.

    A log-spaced scan brackets the first sign change of P_RC - P_DM (from
    not-greater to greater), which is then bisected.
    """
    lo, hi = search_interval
    if not 0 < lo < hi:
        raise ValueError("search interval must satisfy 0 < lo < hi")
    n_pts = max(2, int(math.ceil(points_per_decade * math.log10(hi / lo))) + 1)
    grid = np.geomspace(lo, hi, n_pts)
    values = [_advantage(eta, kappa, n_bar_B, float(n)) for n in grid]
    ups = [i for i in range(n_pts - 1) if values[i] <= 0.0 < values[i + 1]]
    if not ups:
        raise NoCrossingError(
            f"no crossing in [{lo}, {hi}] for eta={eta}, kappa={kappa}, n_bar_B={n_bar_B}"
        )
    if len(ups) > 1:
        warnings.warn(
            f"{len(ups)} crossings found in [{lo}, {hi}]; returning the smallest", RuntimeWarning
        )
    a, b = float(grid[ups[0]]), float(grid[ups[0] + 1])
    while b - a > xtol:
        mid = 0.5 * (a + b)
        if _advantage(eta, kappa, n_bar_B, mid) > 0.0:
            b = mid
        else:
            a = mid
    return 0.5 * (a + b)


@dataclass(frozen=True)
class CrossoverPoint:
    n_bar_B: float
    n_min: Optional[float]
    status: str


def crossover_curve(
    eta: float,
    kappa: float,
    n_bar_B_grid: Sequence[float],
    search_interval: Tuple[float, float] = (1e-2, 1e2),
) -> List[CrossoverPoint]:
    """``n_min_crossover`` at every background level; missing crossings are marked."""
    if len(n_bar_B_grid) == 0:
        raise ValueError("background grid is empty")
    rows = []
    for nb in n_bar_B_grid:
        try:
            rows.append(CrossoverPoint(float(nb), n_min_crossover(eta, kappa, float(nb), search_interval), "ok"))
        except NoCrossingError:
            rows.append(CrossoverPoint(float(nb), None, "no-crossing"))
    return rows
