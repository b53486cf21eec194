import json
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from fluidnet.errors import NetFormatError, NetSyntaxError, NotEnabled
from fluidnet.model import (
    Lfspn,
    Transition,
    enabled,
    fire,
    net_from_dict,
    net_to_dict,
    parse_net,
    parse_rational,
    serialize_net,
    validate_net,
)

from conftest import fixture_doc, fixture_text


def test_parse_running_example():
    net = parse_net(fixture_text("e1_b"))
    assert len(net.discrete_places) == 2
    assert len(net.continuous_places) == 1
    assert len(net.transitions) == 3
    assert net.transition("t1").rate == Fraction(2)


def test_parse_docprep():
    net = parse_net(fixture_text("docprep"))
    assert len(net.discrete_places) == 4
    assert len(net.continuous_places) == 1
    assert [t.label for t in net.transitions] == ["tx", "gr", "dt"]


def test_parse_terminal_only_net():
    net = net_from_dict({
        "discrete_places": ["p"],
        "continuous_places": ["q"],
        "initial_marking": [1],
        "transitions": [],
    })
    assert validate_net(net).ok


def test_parse_rationals_exact():
    assert parse_rational("3/2") == Fraction(3, 2)
    assert parse_rational("-7") == Fraction(-7)
    with pytest.raises(NetFormatError):
        parse_rational("1.5")


def test_parse_syntax_error_has_position():
    with pytest.raises(NetSyntaxError) as err:
        parse_net("{not json")
    assert "line" in err.value.path


def test_parse_schema_error_has_field_path():
    doc = fixture_doc("e1_b")
    doc["transitions"][1]["in"] = {"p2": -1}
    with pytest.raises(NetFormatError) as err:
        net_from_dict(doc)
    assert err.value.path == "transitions[1].in.p2"


def test_validate_fixture_clean():
    report = validate_net(parse_net(fixture_text("e1_b")))
    assert report.ok and not report.warnings


def test_validate_rate_not_positive():
    doc = fixture_doc("e1_b")
    doc["transitions"][0]["rate"] = "0"
    report = validate_net(net_from_dict(doc))
    assert ("RATE_NOT_POSITIVE" in {code for code, _ in report.errors})


def test_validate_multi_continuous_warns():
    doc = fixture_doc("e1_b")
    doc["continuous_places"] = ["q", "q2"]
    report = validate_net(net_from_dict(doc))
    assert report.ok
    assert "MULTI_CONTINUOUS" in {code for code, _ in report.warnings}


def test_enabled_running_example(nets):
    net = nets["e1_b"]
    assert {t.name for t in enabled(net, (1, 0))} == {"t1"}
    assert {t.name for t in enabled(net, (0, 1))} == {"t2", "t3"}


def test_enabled_empty_when_no_tokens(nets):
    assert enabled(nets["docprep"], (0, 0, 0, 0)) == []


def test_fire_running_example(nets):
    assert fire(nets["e1_b"], (1, 0), "t1") == (0, 1)


def test_fire_docprep(nets):
    assert fire(nets["docprep"], (1, 1, 0, 0), "t1") == (0, 1, 1, 0)


def test_fire_self_loop():
    net = net_from_dict({
        "discrete_places": ["p"],
        "continuous_places": ["q"],
        "initial_marking": [1],
        "transitions": [{"name": "t", "label": "a", "rate": "1", "in": {"p": 1}, "out": {"p": 1}}],
    })
    assert fire(net, (1,), "t") == (1,)


def test_fire_not_enabled(nets):
    with pytest.raises(NotEnabled):
        fire(nets["e1_b"], (1, 0), "t2")


def test_roundtrip_all_fixtures():
    for name in ("e1_b", "e1p_t", "docprep", "docprep_ext"):
        net = parse_net(fixture_text(name))
        assert parse_net(serialize_net(net)) == net


def test_marking_dependent_rate_first_match():
    doc = fixture_doc("e1_b")
    doc["transitions"][0]["rate"] = [
        {"marking": {"p1": 1}, "value": "5"},
        {"value": "2"},
    ]
    net = net_from_dict(doc)
    t1 = net.transition("t1")
    assert t1.rate_in((1, 0), net.place_index) == Fraction(5)
    assert t1.rate_in((0, 1), net.place_index) == Fraction(2)
    assert parse_net(serialize_net(net)) == net


def test_marking_dependent_rate_requires_catch_all():
    doc = fixture_doc("e1_b")
    doc["transitions"][0]["rate"] = [{"marking": {"p1": 1}, "value": "5"}]
    with pytest.raises(NetFormatError):
        net_from_dict(doc)


@given(st.integers(0, 3), st.integers(0, 3), st.integers(0, 3), st.integers(0, 3))
def test_fire_preserves_naturality(a, b, extra_a, extra_b):
    net = net_from_dict({
        "discrete_places": ["p1", "p2"],
        "continuous_places": ["q"],
        "initial_marking": [a + extra_a, b + extra_b],
        "transitions": [{
            "name": "t", "label": "x", "rate": "1",
            "in": {"p1": a, "p2": b}, "out": {"p1": b, "p2": a},
        }],
    })
    m = net.initial_marking
    after = fire(net, m, "t")
    assert len(after) == len(m)
    assert all(k >= 0 for k in after)


@given(
    st.lists(st.integers(0, 4), min_size=3, max_size=3),
    st.lists(st.integers(0, 4), min_size=3, max_size=3),
    st.lists(st.integers(0, 2), min_size=3, max_size=3),
)
def test_enabled_monotone_in_marking(lo, bump, weights):
    net = net_from_dict({
        "discrete_places": ["p1", "p2", "p3"],
        "continuous_places": ["q"],
        "initial_marking": [0, 0, 0],
        "transitions": [{
            "name": "t", "label": "x", "rate": "1",
            "in": {p: w for p, w in zip(("p1", "p2", "p3"), weights)},
            "out": {},
        }],
    })
    hi = tuple(x + d for x, d in zip(lo, bump))
    lower = {t.name for t in enabled(net, tuple(lo))}
    upper = {t.name for t in enabled(net, hi)}
    assert lower <= upper
