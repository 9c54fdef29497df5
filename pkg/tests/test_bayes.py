import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qimimic.bayes import (
    LOG_ODDS_CLAMP,
    MAX_POSTERIOR,
    PosteriorState,
    PulseEvidence,
    coherent_llr,
    log_likelihood,
    observe,
    posterior,
    tmsv_llr_table,
    update,
)
from qimimic.detection import Hypothesis, p_noclick_object_coherent, tmsv_signal_noclick
from qimimic.model import FixedCoherent, RandomCoherent, SystemParams, TmsvDirect
from qimimic.photonstats import ClickPattern

FIG1B = SystemParams(eta=0.9, kappa=0.1, n_bar=1.0, n_bar_B=3.0)
MIMIC = RandomCoherent()
P, A = Hypothesis.PRESENT, Hypothesis.ABSENT


def test_coherent_log_likelihoods():
    ev0 = PulseEvidence(False, 1.0)
    ev1 = PulseEvidence(True, 1.0)
    assert log_likelihood(MIMIC, FIG1B, ev0, A) == pytest.approx(math.log(1 / 3.7), rel=1e-15)
    assert log_likelihood(MIMIC, FIG1B, ev0, P) == pytest.approx(-math.log(3.7) - 0.09 / 3.7, rel=1e-15)
    click = math.exp(log_likelihood(MIMIC, FIG1B, ev1, P))
    assert click == pytest.approx(1 - 0.2637754399716537686, rel=1e-14)
    assert round(click, 6) == 0.736225
    assert log_likelihood(MIMIC, FIG1B, ev1, A) == pytest.approx(math.log(2.7 / 3.7), rel=1e-15)


def test_click_without_background_impossible_when_absent():
    p = FIG1B.replace(n_bar_B=0.0)
    assert log_likelihood(MIMIC, p, PulseEvidence(True, 1.0), A) == -math.inf
    s = observe(PosteriorState(), MIMIC, p, PulseEvidence(True, 1.0))
    assert s.log_odds == LOG_ODDS_CLAMP


def test_no_click_log_likelihood_at_tiny_kappa():
    p = SystemParams(eta=0.9, kappa=1e-7, n_bar=1.0, n_bar_B=5.56e-8)
    ll_p = log_likelihood(MIMIC, p, PulseEvidence(False, 2.0), P)
    ll_a = log_likelihood(MIMIC, p, PulseEvidence(False, 2.0), A)
    Z = 1 + 0.9 * 5.56e-8
    assert ll_p - ll_a == pytest.approx(-0.9e-7 * 2.0 / Z, rel=1e-9)


def test_tmsv_log_likelihood():
    prot = TmsvDirect(2)
    for mask in range(4):
        pat = ClickPattern(mask, 2)
        ll = log_likelihood(prot, FIG1B, PulseEvidence(False, pat), P)
        assert math.exp(ll) == pytest.approx(tmsv_signal_noclick(FIG1B, 2, pat, P), rel=1e-14)
        ll1 = log_likelihood(prot, FIG1B, PulseEvidence(True, pat), P)
        assert math.exp(ll) + math.exp(ll1) == pytest.approx(1.0, abs=1e-15)


def test_evidence_must_match_protocol():
    with pytest.raises(TypeError):
        log_likelihood(TmsvDirect(1), FIG1B, PulseEvidence(False, 1.0), P)
    with pytest.raises(TypeError):
        log_likelihood(MIMIC, FIG1B, PulseEvidence(False, ClickPattern(0, 1)), P)
    with pytest.raises(ValueError):
        log_likelihood(TmsvDirect(2), FIG1B, PulseEvidence(False, ClickPattern(0, 1)), P)
    with pytest.raises(ValueError):
        log_likelihood(FixedCoherent(), FIG1B, PulseEvidence(False, 2.0), P)


def test_update_examples():
    s = PosteriorState.from_prior(0.5)
    assert update(s, -1.3, -1.3) == s
    s2 = update(s, math.log(0.2), math.log(0.1))
    assert posterior(s2) == pytest.approx(2 / 3, rel=1e-15)


def test_posterior_examples():
    assert posterior(PosteriorState(0.0)) == 0.5
    assert posterior(PosteriorState(math.log(2))) == pytest.approx(2 / 3, rel=1e-15)
    top = posterior(PosteriorState(1e6))
    assert top <= 1 - 1e-15 and top == MAX_POSTERIOR
    assert PosteriorState(-1e6).log_odds == -LOG_ODDS_CLAMP
    assert 0.0 < posterior(PosteriorState(-1e6)) < 1e-300


def test_prior_round_trip():
    for prior in (0.1, 0.5, 0.73):
        assert posterior(PosteriorState.from_prior(prior)) == pytest.approx(prior, rel=1e-14)
    assert PosteriorState.from_prior(0.0).log_odds == -LOG_ODDS_CLAMP
    assert PosteriorState.from_prior(1.0).log_odds == LOG_ODDS_CLAMP


def _probability_space(prior, protocol, params, evidence):
    """Bayes' rule applied pulse by pulse to probabilities (reference)."""
    p = prior
    for ev in evidence:
        lp = math.exp(log_likelihood(protocol, params, ev, P))
        la = math.exp(log_likelihood(protocol, params, ev, A))
        p = lp * p / (lp * p + la * (1 - p))
    return p


def test_five_pulse_sequence_matches_probability_space():
    seq = [(True, 0.3), (False, 2.2), (True, 1.1), (True, 0.05), (False, 4.0)]
    evidence = [PulseEvidence(c, lam) for c, lam in seq]
    s = PosteriorState.from_prior(0.5)
    for ev in evidence:
        s = observe(s, MIMIC, FIG1B, ev)
    ref = _probability_space(0.5, MIMIC, FIG1B, evidence)
    assert posterior(s) == pytest.approx(ref, rel=1e-12)


pulses = st.lists(
    st.tuples(st.booleans(), st.floats(0.0, 20.0)), min_size=1, max_size=40
)


@given(seq=pulses, prior=st.floats(0.01, 0.99))
def test_random_sequences_match_probability_space(seq, prior):
    evidence = [PulseEvidence(c, lam) for c, lam in seq]
    s = PosteriorState.from_prior(prior)
    for ev in evidence:
        s = observe(s, MIMIC, FIG1B, ev)
    assert posterior(s) == pytest.approx(_probability_space(prior, MIMIC, FIG1B, evidence), rel=1e-12)


@given(seq=pulses, data=st.data())
def test_order_invariance(seq, data):
    perm = data.draw(st.permutations(seq))
    finals = []
    for order in (seq, perm):
        s = PosteriorState()
        for c, lam in order:
            s = observe(s, MIMIC, FIG1B, PulseEvidence(c, lam))
        finals.append(s.log_odds)
    assert finals[0] == pytest.approx(finals[1], rel=1e-12, abs=1e-12)


def test_vectorized_increments_agree():
    lam = np.array([0.0, 0.4, 1.0, 7.5])
    for click in (False, True):
        got = coherent_llr(FIG1B, lam, np.full(4, click))
        for l, g in zip(lam, got):
            ev = PulseEvidence(click, float(l))
            ref = log_likelihood(MIMIC, FIG1B, ev, P) - log_likelihood(MIMIC, FIG1B, ev, A)
            assert g == pytest.approx(ref, abs=1e-15, rel=1e-13)
    no, yes = tmsv_llr_table(FIG1B, 3)
    for k in range(4):
        pat = ClickPattern((1 << k) - 1, 3)
        for click, table in ((False, no), (True, yes)):
            ev = PulseEvidence(click, pat)
            ref = log_likelihood(TmsvDirect(3), FIG1B, ev, P) - log_likelihood(TmsvDirect(3), FIG1B, ev, A)
            assert table[k] == pytest.approx(ref, rel=1e-12, abs=1e-15)
