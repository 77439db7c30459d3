import random
from dataclasses import replace
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tapredict.automata import EPSILON, INF, EventAlphabet, ModelError
from tapredict.fa_predict import NOT_PREDICTABLE
from tapredict.oracle import random_bounded_ta, validate_ta_witness
from tapredict.ta_predict import (
    END,
    FAULT_CLOCK,
    FAULT_SINK,
    NZ,
    SamplingSpec,
    apply_sampling,
    build_A2,
    build_twin_A1,
    check_delta_predictable,
    kappa_bound,
    max_delta,
    normalize,
    reduce_reachability,
)
from tapredict.timed.automaton import TaEdge, TimedAutomaton
from tapredict.timed.constraints import TRUE, atom
from tapredict.timed.reach import location_reachable
from tapredict.timed.runs import RunStep

ALPHA = EventAlphabet({"a"}, {"u", "f"}, "f")
NO_FAULT = TimedAutomaton(
    ("p",), "p", ("x",), ALPHA, (TaEdge("p", atom("x", "==", 1), "a", {"x"}, "p"),), {"p": atom("x", "<=", 1)}
)
THIRD = SamplingSpec(Fraction(3, 5))


# --- normalization -------------------------------------------------------------


def test_normalize_B(B):
    n = normalize(B)
    ta = n.ta
    f_edges = ta.fault_edges()
    assert [e.dst for e in f_edges] == [FAULT_SINK]
    assert FAULT_CLOCK in f_edges[0].resets
    assert ta.inv(FAULT_SINK) == atom(FAULT_CLOCK, "<=", 1)
    loops = [e for e in ta.edges if e.src == FAULT_SINK]
    assert [(e.label, e.dst, set(e.resets)) for e in loops] == [("a", FAULT_SINK, {FAULT_CLOCK})]
    # the old fault target is unreachable and dropped
    assert "sink" not in ta.locations


def test_normalize_without_fault_edge():
    n = normalize(NO_FAULT)
    assert n.ta == NO_FAULT and n.fault_sink is None


def test_normalize_is_idempotent(G, B):
    for m in (G, B):
        once = normalize(m)
        assert normalize(once) is once
        assert normalize(once.ta).ta == once.ta


def test_reserved_names_rejected(B):
    with pytest.raises(ModelError):
        normalize(B.replace(locations=B.locations + ("END",)))
    with pytest.raises(ModelError):
        normalize(B.replace(clocks=B.clocks + ("y",)))


# --- twin plant pieces ---------------------------------------------------------


def test_A1_fault_edge_bound(B):
    n = normalize(B)
    a1 = build_twin_A1(n, 0)
    ends = [e for e in a1.edges if e.dst == END and e.origin[0] == "fault"]
    assert ends and all(("y", "<=", 0) in e.guard.atoms for e in ends)
    assert a1.repeated == {NZ}
    assert build_twin_A1(n, 0, divergence=False).repeated == {END}


def test_A1_sampled_switch_and_bound(B):
    n = normalize(B).scaled(THIRD.scale)
    a1 = build_twin_A1(n, 6, sampling=THIRD)
    switches = [e for e in a1.edges if e.origin[0] == "switch"]
    assert switches and all(e.guard == atom("s", "==", 0) for e in switches)
    ends = [e for e in a1.edges if e.origin[0] == "fault"]
    assert all(("y", "<=", 18) in e.guard.atoms for e in ends)
    assert all(("s", "<=", 3) in a1.inv(q).atoms for q in a1.locations)


def test_A2_of_B(B):
    a2 = build_A2(normalize(B))
    assert sorted((e.src, e.label, e.dst) for e in a2.edges) == [("l0", EPSILON, "l1"), ("l1", "a", "l1")]
    assert a2.clocks == ("x'",)
    assert not set(a2.clocks) & set(build_twin_A1(normalize(B), 2).clocks)


def test_A2_of_fault_only_automaton():
    only_f = TimedAutomaton(("p", "q"), "p", ("x",), ALPHA, (TaEdge("p", TRUE, "f", (), "q"),),
                            {"p": atom("x", "<=", 1), "q": atom("x", "<=", 1)})
    assert build_A2(normalize(only_f)).edges == ()


# --- verdicts ------------------------------------------------------------------


def test_G_threshold(G):
    assert check_delta_predictable(G, 3).predictable
    v = check_delta_predictable(G, 4)
    assert not v.predictable
    assert validate_ta_witness(G, v)
    w = v.witness
    assert 1 <= w.switch_time < 2
    assert 3 < w.horizon <= 4


def test_B_threshold(B):
    assert check_delta_predictable(B, 4).predictable
    v = check_delta_predictable(B, 5)
    assert not v.predictable and validate_ta_witness(B, v)


def test_no_fault_always_predictable():
    assert check_delta_predictable(NO_FAULT, 0).predictable
    assert max_delta(NO_FAULT) == INF


def test_max_delta(G, B):
    assert max_delta(G) == 3
    assert max_delta(B) == 4
    assert max_delta(B, sampling=SamplingSpec(1)) == 4
    assert max_delta(B, sampling=THIRD) == 6


def test_sampled_B(B):
    assert check_delta_predictable(B, 6, sampling=THIRD).predictable
    v = check_delta_predictable(B, 7, sampling=THIRD)
    assert not v.predictable
    assert validate_ta_witness(B, v)
    assert v.anticipation == Fraction(21, 5)
    assert Fraction(v.witness.switch_time, 5) % Fraction(3, 5) == 0


def test_kappa_bound(G, B):
    assert kappa_bound(G) == 5
    assert kappa_bound(B) == 6
    assert kappa_bound(B, THIRD) == 10
    assert kappa_bound(NO_FAULT) == INF


def test_sampling_spec():
    s = SamplingSpec.parse("3/5")
    assert (s.scale, s.period, str(s)) == (5, 3, "3/5")
    assert s.anticipation(6) == Fraction(18, 5)
    with pytest.raises(ModelError):
        SamplingSpec.parse("x/5")
    with pytest.raises(ModelError):
        SamplingSpec.parse("0")


def test_apply_sampling(B):
    scaled, spec, sampler = apply_sampling(B, Fraction(3, 5))
    assert scaled.inv("l0") == atom("x", "<=", 40)
    assert sampler.inv("sampler") == atom("s", "<=", 3)
    assert {e.label for e in sampler.edges} == {EPSILON} | B.alphabet.events
    scaled1, _, _ = apply_sampling(B, 1)
    assert scaled1 == B


def test_zeno_flag_only_widens_non_predictability(G):
    for d in range(0, 5):
        strict = check_delta_predictable(G, d, witness=False).predictable
        zeno = check_delta_predictable(G, d, divergence=False, witness=False).predictable
        assert strict or not zeno


def test_initial_fault_not_predictable():
    a = TimedAutomaton(("p",), "p", ("x",), ALPHA,
                       (TaEdge("p", TRUE, "f", (), "p"), TaEdge("p", atom("x", "==", 1), "a", {"x"}, "p")),
                       {"p": atom("x", "<=", 1)})
    assert max_delta(a) == NOT_PREDICTABLE


@pytest.mark.parametrize("name,sampling", [("G", None), ("B", None), ("B", THIRD), ("G_untimed", None)])
def test_monotone_in_delta(name, sampling):
    from tapredict.modelio import bundled_model

    m = bundled_model(name)
    if name == "G_untimed":
        from tapredict.fa_predict import check_k_predictable

        verdicts = [check_k_predictable(m, k).predictable for k in range(0, 4)]
    else:
        hi = kappa_bound(m, sampling)
        verdicts = [check_delta_predictable(m, d, sampling=sampling, witness=False).predictable
                    for d in range(0, hi + 1)]
    assert verdicts == sorted(verdicts, reverse=True)


# --- witness mutations ---------------------------------------------------------


@pytest.fixture(scope="module")
def g4():
    from tapredict.modelio import bundled_model

    G = bundled_model("G")
    return G, check_delta_predictable(G, 4)


def _mutate(v, **changes):
    return replace(v, witness=replace(v.witness, **changes))


def _shift_first(steps, d):
    first = steps[0]
    return (RunStep(first.delay + d, first.edge),) + steps[1:]


MUTATIONS = {
    "bound too small": lambda v: replace(v, delta=3),
    "late switch": lambda v: _mutate(v, switch_time=v.witness.switch_time + 1),
    "prefix delayed": lambda v: _mutate(v, prefix_steps=_shift_first(v.witness.prefix_steps, Fraction(1, 2))),
    "twin run cut": lambda v: _mutate(v, twin_steps=v.witness.twin_steps[:-1]),
    "fault-free run broken": lambda v: _mutate(
        v, nonfaulty_steps=_shift_first(v.witness.nonfaulty_steps, Fraction(3, 2))),
    "cycle emptied": lambda v: _mutate(v, cycle_start=len(v.witness.nonfaulty_steps)),
    "fault time pushed": lambda v: _mutate(v, fault_time=v.witness.fault_time + 2),
    "no witness": lambda v: replace(v, witness=None),
    "sampling instant": lambda v: replace(v, sampling=SamplingSpec(Fraction(7, 1))),
}


@pytest.mark.parametrize("name", sorted(MUTATIONS))
def test_mutated_witness_rejected(g4, name):
    G, v = g4
    assert validate_ta_witness(G, v)
    assert not validate_ta_witness(G, MUTATIONS[name](v))


# --- reachability reduction ----------------------------------------------------


def test_reduce_unreachable_target():
    a = TimedAutomaton(("p", "q"), "p", ("x",), ALPHA, (TaEdge("p", atom("x", "==", 1), "a", {"x"}, "p"),),
                       {"p": atom("x", "<=", 1), "q": atom("x", "<=", 1)})
    assert check_delta_predictable(reduce_reachability(a, "q"), 0).predictable


def test_reduce_initial_target():
    r = reduce_reachability(NO_FAULT, "p")
    v = check_delta_predictable(r, 0)
    assert not v.predictable and validate_ta_witness(r, v)


def test_reduce_input_errors(B):
    with pytest.raises(ModelError):
        reduce_reachability(B, "l1")
    with pytest.raises(ModelError):
        reduce_reachability(NO_FAULT, "nowhere")


@settings(max_examples=25)
@given(st.integers(0, 2**31))
def test_reduce_matches_zone_reachability(seed):
    rng = random.Random(seed)
    a = random_bounded_ta(rng)
    target = rng.choice(a.locations)
    v = check_delta_predictable(reduce_reachability(a, target), 0)
    assert v.predictable == (not location_reachable(a, {target}))
    if not v.predictable:
        assert validate_ta_witness(reduce_reachability(a, target), v)
