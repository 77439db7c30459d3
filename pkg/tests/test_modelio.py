import json
import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from tapredict.automata import EPSILON, ModelError
from tapredict.modelio import (
    BUNDLED,
    bundled_model,
    dump_model,
    dumps,
    loads,
    loads_trace,
    parse_model,
    parse_rational,
    to_dot,
)
from tapredict.oracle import random_bounded_ta, random_fa


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_round_trip(name):
    m = bundled_model(name)
    assert loads(dumps(m)) == m


@given(st.integers(0, 2**31))
def test_random_round_trip(seed):
    rng = random.Random(seed)
    for m in (random_fa(rng), random_bounded_ta(rng)):
        again = loads(dumps(m))
        assert again == m
    # invariants are not part of equality, compare them directly
    assert again.invariants == m.invariants


def test_eps_and_null_mean_silent():
    base = {"type": "fa", "locations": ["p", "q"], "initial": "p",
            "events": {"observable": ["a"], "unobservable": ["f"], "fault": "f"}}
    m = parse_model({**base, "edges": [{"src": "p", "event": "eps", "dst": "q"},
                                       {"src": "q", "event": None, "dst": "p"}]})
    assert {e.label for e in m.edges} == {EPSILON}
    assert dump_model(m)["edges"][0]["event"] is None


def test_malformed_json_reports_position():
    with pytest.raises(ModelError) as exc:
        loads('{"type": "fa",\n  "locations": [}')
    assert "line 2" in str(exc.value) and "column" in str(exc.value)


def test_guard_error_reports_column():
    text = json.dumps({
        "type": "ta", "locations": ["p"], "initial": "p", "clocks": ["x"],
        "events": {"observable": ["a"], "unobservable": ["f"], "fault": "f"},
        "edges": [{"src": "p", "event": "a", "dst": "p", "guard": "x<1 && x ! 2"}],
    })
    with pytest.raises(ModelError, match="column 8"):
        loads(text)


@pytest.mark.parametrize("patch,message", [
    ({"bogus": 1}, "unknown field"),
    ({"type": "pda"}, '"type"'),
    ({"events": {"observable": ["eps"], "fault": "eps"}}, "reserved"),
    ({"initial": "nowhere"}, "initial"),
    ({"clocks": ["x", "x"]}, "duplicates"),
])
def test_model_errors(B, patch, message):
    data = {**dump_model(B), **patch}
    with pytest.raises(ModelError, match=message):
        parse_model(data)


def test_dot_export_counts(G):
    dot = to_dot(G)
    assert dot.count(" -> ") == len(G.edges) + 1  # plus the initial arrow
    assert "x<=1" in dot


def test_trace_parsing():
    w = loads_trace('{"delay": "1/2", "event": "a"}\n{"delay": 1, "event": "a"}\n{"delay": 0.25}\n')
    assert w.timestamps() == [(Fraction(1, 2), "a"), (Fraction(3, 2), "a")]
    assert w.duration == Fraction(7, 4)
    with pytest.raises(ModelError, match="line 2"):
        loads_trace('{"delay": 1}\n{"delay": 1, "event": "a"}')
    with pytest.raises(ModelError, match="negative"):
        loads_trace('{"delay": -1, "event": "a"}')
    with pytest.raises(ModelError, match="line 1"):
        loads_trace('{"delay": 1, "event": "a"')


def test_parse_rational():
    assert parse_rational("3/5") == Fraction(3, 5)
    assert parse_rational(0.1) == Fraction(1, 10)
    with pytest.raises(ModelError):
        parse_rational(True)


def test_dot_invariant_label_uses_graphviz_line_break(G):
    text = to_dot(G)
    assert '\\n[x<=' in text
    assert '\\\\n' not in text
