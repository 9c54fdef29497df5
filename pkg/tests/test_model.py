import dataclasses

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qimimic.model import (
    FixedCoherent,
    ParameterError,
    RandomCoherent,
    Scenario,
    SystemParams,
    TmsvDirect,
    parse_protocol,
    validate_params,
)

FIG1B = dict(eta=0.9, kappa=0.1, n_bar=1.0, n_bar_B=3.0, prior_present=0.5)


def test_figure_parameters_accepted():
    p = SystemParams(**FIG1B)
    assert validate_params(p) is p


@pytest.mark.parametrize(
    "field, value, message",
    [
        ("eta", 0.0, "eta out of range"),
        ("eta", 1.0000001, "eta out of range"),
        ("kappa", 1.0, "kappa out of range"),
        ("kappa", -1e-9, "kappa out of range"),
        ("n_bar", 0.0, "n_bar out of range"),
        ("n_bar_B", -0.1, "n_bar_B out of range"),
        ("prior_present", 1.5, "prior_present out of range"),
        ("eta", float("nan"), "eta must be a finite number"),
    ],
)
def test_out_of_range_fields_are_named(field, value, message):
    with pytest.raises(ParameterError, match=message):
        SystemParams(**dict(FIG1B, **{field: value}))


def test_boundary_values_allowed():
    SystemParams(eta=1.0, kappa=0.0, n_bar=1e-12, n_bar_B=0.0, prior_present=0.0)
    SystemParams(eta=1.0, kappa=0.0, n_bar=1.0, n_bar_B=0.0, prior_present=1.0)


params_strategy = st.builds(
    SystemParams,
    eta=st.floats(1e-6, 1.0),
    kappa=st.floats(0.0, 0.999),
    n_bar=st.floats(1e-6, 1e3),
    n_bar_B=st.floats(0.0, 1e3),
    prior_present=st.floats(0.0, 1.0),
)


@given(params_strategy)
def test_validation_is_idempotent(p):
    once = validate_params(p)
    twice = validate_params(once)
    assert twice == once and dataclasses.astuple(twice) == dataclasses.astuple(p)


def test_params_are_immutable_and_replace_revalidates():
    p = SystemParams(**FIG1B)
    with pytest.raises(dataclasses.FrozenInstanceError):
        p.eta = 0.5
    assert p.replace(n_bar=0.5).n_bar == 0.5
    with pytest.raises(ParameterError):
        p.replace(eta=2.0)


@pytest.mark.parametrize(
    "text, expected",
    [
        ("mimic", RandomCoherent()),
        ("fixed", FixedCoherent()),
        ("tmsv", TmsvDirect(1)),
        ("tmsv:4", TmsvDirect(4)),
        (" TMSV:2 ", TmsvDirect(2)),
    ],
)
def test_parse_protocol(text, expected):
    assert parse_protocol(text) == expected


@pytest.mark.parametrize("text", ["tmsv:0", "tmsv:x", "tmsv:17", "squeezed"])
def test_parse_protocol_rejects(text):
    with pytest.raises(ParameterError):
        parse_protocol(text)


def test_protocol_names():
    assert [p.name for p in (RandomCoherent(), FixedCoherent(), TmsvDirect(2))] == [
        "mimic",
        "fixed",
        "tmsv:2",
    ]


def test_scenario_appear_at():
    s = Scenario.appear_at(10_000, 0.1)
    assert s.kappa_at(1) == 0.0
    assert s.kappa_at(9_999) == 0.0
    assert s.kappa_at(10_000) == 0.1
    assert list(s.pieces(9_990, 10_010)) == [(9_990, 10_000, 0.0), (10_000, 10_010, 0.1)]
    assert list(Scenario.present(0.2).pieces(1, 5)) == [(1, 5, 0.2)]
    assert Scenario.absent().kappa_at(123) == 0.0


@pytest.mark.parametrize(
    "segments",
    [((2, 0.1),), ((1, 0.1), (1, 0.2)), ((1, 1.0),), ()],
)
def test_scenario_rejects_bad_segments(segments):
    with pytest.raises(ParameterError):
        Scenario(segments)
