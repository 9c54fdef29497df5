"""Sequential Bayesian update of the object-present probability.

The posterior is carried as log-odds ``L = ln P(present | record) / P(absent | record)``
so that a pulse only adds ``ln P(s | present) - ln P(s | absent)``. ``L`` is
clamped to ``[-LOG_ODDS_CLAMP, LOG_ODDS_CLAMP]`` after every update.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from .detection import ChannelConstants, Hypothesis, tmsv_signal_probabilities
from .model import FixedCoherent, Protocol, RandomCoherent, SystemParams, TmsvDirect
from .photonstats import ClickPattern

LOG_ODDS_CLAMP = 700.0
MAX_POSTERIOR = 1.0 - 1e-15


def clamp_log_odds(value: float) -> float:
    if math.isnan(value):
        raise ValueError("log-odds became NaN")
    return min(max(value, -LOG_ODDS_CLAMP), LOG_ODDS_CLAMP)


def log_odds_to_probability(log_odds):
    """``1 / (1 + exp(-L))``, capped just below one. Works on arrays."""
    p = 1.0 / (1.0 + np.exp(-np.asarray(log_odds, dtype=float)))
    return np.minimum(p, MAX_POSTERIOR)[()]


@dataclass(frozen=True)
class PosteriorState:
    log_odds: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "log_odds", clamp_log_odds(float(self.log_odds)))

    @classmethod
    def from_prior(cls, prior_present: float) -> "PosteriorState":
        if not 0.0 <= prior_present <= 1.0:
            raise ValueError(f"prior must be in [0, 1] (got {prior_present})")
        if prior_present == 0.0:
            return cls(-LOG_ODDS_CLAMP)
        if prior_present == 1.0:
            return cls(LOG_ODDS_CLAMP)
        return cls(math.log(prior_present) - math.log1p(-prior_present))

    @property
    def probability(self) -> float:
        return posterior(self)


@dataclass(frozen=True)
class PulseEvidence:
    """Signal outcome of one pulse plus what the receiver knows about the pulse.

    ``pulse_info`` is the intensity for coherent pulses (``n_bar`` itself for
    fixed pulses) and the idler :class:`ClickPattern` for TMSV.
    """

    click: bool
    pulse_info: Union[float, ClickPattern]


def _check_evidence(protocol: Protocol, params: SystemParams, evidence: PulseEvidence) -> None:
    info = evidence.pulse_info
    if isinstance(protocol, TmsvDirect):
        if not isinstance(info, ClickPattern):
            raise TypeError("TMSV evidence needs a ClickPattern")
        if info.num_detectors != protocol.num_idler_detectors:
            raise ValueError(
                f"pattern has {info.num_detectors} detectors, protocol expects "
                f"{protocol.num_idler_detectors}"
            )
        return
    if isinstance(info, ClickPattern):
        raise TypeError("coherent-pulse evidence needs an intensity, not a click pattern")
    if not info >= 0:
        raise ValueError(f"pulse intensity must be >= 0 (got {info})")
    if isinstance(protocol, FixedCoherent) and info != params.n_bar:
        raise ValueError(f"fixed-pulse evidence must carry n_bar={params.n_bar} (got {info})")


def log_likelihood(
    protocol: Protocol, params: SystemParams, evidence: PulseEvidence, hypothesis: Hypothesis
) -> float:
    """Natural log of P(signal outcome | pulse info, hypothesis)."""
    _check_evidence(protocol, params, evidence)
    eta, nb = params.eta, params.n_bar_B
    log_z = math.log1p(eta * nb)
    if hypothesis is Hypothesis.ABSENT:
        if not evidence.click:
            return -log_z
        return math.log(eta * nb) - log_z if nb > 0 else -math.inf
    if isinstance(protocol, TmsvDirect):
        probs = tmsv_signal_probabilities(
            params, protocol.num_idler_detectors, evidence.pulse_info.clicks
        )
        return math.log(probs.click if evidence.click else probs.noclick)
    ch = ChannelConstants.from_params(params)
    g = ch.gamma * float(evidence.pulse_info)
    if not evidence.click:
        return -log_z - g
    return math.log(eta * nb - math.expm1(-g)) - log_z


def update(state: PosteriorState, ll_present: float, ll_absent: float) -> PosteriorState:
    """Add one pulse's log-likelihood ratio to the log-odds."""
    if math.isnan(ll_present) or math.isnan(ll_absent):
        raise ValueError("log-likelihoods must not be NaN")
    if ll_present == ll_absent:
        return state
    return PosteriorState(state.log_odds + (ll_present - ll_absent))


def posterior(state: PosteriorState) -> float:
    """P(present | record) for a state."""
    return float(log_odds_to_probability(state.log_odds))


def observe(
    state: PosteriorState, protocol: Protocol, params: SystemParams, evidence: PulseEvidence
) -> PosteriorState:
    """Update ``state`` with one pulse."""
    return update(
        state,
        log_likelihood(protocol, params, evidence, Hypothesis.PRESENT),
        log_likelihood(protocol, params, evidence, Hypothesis.ABSENT),
    )


# --- vectorized increments for the simulator --------------------------------


def coherent_llr(params: SystemParams, lam, click):
    """Log-likelihood ratio of coherent pulses with intensities ``lam``.

    No click adds ``-gamma lam``; a click adds
    ``log1p((1 - exp(-gamma lam)) / (eta n_B))``, which is ``+inf`` without
    background (an absent object cannot click) and 0 for ``lam = 0``.
    """
    lam = np.asarray(lam, dtype=float)
    g = ChannelConstants.from_params(params).gamma * lam
    zm1 = params.eta * params.n_bar_B
    with np.errstate(divide="ignore", invalid="ignore"):
        on_click = np.log1p(-np.expm1(-g) / zm1)
    on_click = np.where(g == 0.0, 0.0, on_click)
    return np.where(np.asarray(click, dtype=bool), on_click, -g)[()]


def tmsv_llr_table(params: SystemParams, N: int) -> Tuple[np.ndarray, np.ndarray]:
    """Log-likelihood ratios indexed by idler click count: ``(no_click, click)``."""
    ch = ChannelConstants.from_params(params)
    no_click = np.empty(N + 1)
    click = np.empty(N + 1)
    for k in range(N + 1):
        shift = tmsv_signal_probabilities(params, N, k).shift
        # present no-click is (1/Z - shift), present click is (bc + shift)
        no_click[k] = math.log1p(-shift * ch.Z) if shift * ch.Z < 1.0 else -math.inf
        click[k] = math.log1p(shift / ch.background_click) if ch.background_click > 0 else (
            math.inf if shift > 0 else 0.0
        )
    return no_click, click
