import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from tapredict.automata import INF, EventAlphabet, FiniteAutomaton, ModelError, kappa
from tapredict.fa_predict import (
    NOT_PREDICTABLE,
    build_twin_fa,
    check_k_predictable,
    compute_F_not_f,
    compute_Fk,
    max_k,
    predictable_fa,
)
from tapredict.oracle import fa_oracle_k_predictable, gl_oracle, random_fa, validate_fa_witness

AB = EventAlphabet({"a", "b"}, {"u", "f"}, "f")


def fa(edges, initial="p"):
    locs = sorted({e[0] for e in edges} | {e[2] for e in edges} | {initial})
    return FiniteAutomaton(tuple(locs), initial, tuple(edges), AB)


NO_FAULT = fa([("p", "a", "q"), ("q", "b", "p")])
INITIAL_CONFUSED = fa([("p", "f", "p"), ("p", "a", "p")])

seeds = st.integers(min_value=0, max_value=2**32 - 1)


# --- worked example ----------------------------------------------------------


def test_Fk_of_untimed_G(G_untimed):
    assert compute_Fk(G_untimed, 0) == {"l2"}
    assert compute_Fk(G_untimed, 2) == {"l0", "l1", "l2"}
    with pytest.raises(ModelError):
        compute_Fk(G_untimed, -1)


def test_F_not_f_of_untimed_G(G_untimed):
    assert compute_F_not_f(G_untimed) == {"l0", "l3", "l4"}


def test_twin_components_of_untimed_G(G_untimed):
    a1, a2 = build_twin_fa(G_untimed, 0)
    assert set(a1.locations) == {"l0", "l1", "l2"}
    assert a1.final == {"l2"}
    assert set(a2.locations) == {"l0", "l3", "l4"}


def test_untimed_G_verdicts(G_untimed):
    assert check_k_predictable(G_untimed, 0).predictable
    v = check_k_predictable(G_untimed, 1)
    assert not v.predictable
    w = v.witness
    assert [(e.src, e.dst) for e in w.prefaulty_path] == [("l0", "l1")]
    assert w.stem_path[-1].dst == "l4"
    assert validate_fa_witness(G_untimed, v)
    assert max_k(G_untimed) == 0
    assert predictable_fa(G_untimed)
    assert gl_oracle(G_untimed)


# --- small cases -------------------------------------------------------------


def test_no_fault_edge():
    assert check_k_predictable(NO_FAULT, 5).predictable
    assert max_k(NO_FAULT) == INF
    assert predictable_fa(NO_FAULT)
    a1, _ = build_twin_fa(NO_FAULT, 2)
    assert not a1.final
    assert compute_Fk(NO_FAULT, 3) == set()
    assert compute_F_not_f(NO_FAULT) == {"p", "q"}


def test_fault_enabled_initially_with_infinite_fault_free_path():
    assert max_k(INITIAL_CONFUSED) == NOT_PREDICTABLE
    assert not predictable_fa(INITIAL_CONFUSED)
    assert not gl_oracle(INITIAL_CONFUSED)
    assert validate_fa_witness(INITIAL_CONFUSED, check_k_predictable(INITIAL_CONFUSED, 0))


def test_only_fault_self_loop():
    a = fa([("p", "f", "p")])
    assert compute_F_not_f(a) == set()
    assert predictable_fa(a)
    assert fa_oracle_k_predictable(a, 0)


def test_every_location_fault_enabled_has_empty_a2():
    a = fa([("p", "f", "q"), ("q", "f", "p")])
    _, a2 = build_twin_fa(a, 0)
    assert not a2.final


def test_only_cycle_through_fault_location():
    # the only cycle q -> r -> q uses the fault edge, so no location avoids it
    a = fa([("p", "a", "q"), ("q", "f", "r"), ("r", "b", "q")])
    assert compute_F_not_f(a) == set()


def test_corrupted_witness_rejected(G_untimed):
    v = check_k_predictable(G_untimed, 1)
    from dataclasses import replace

    broken = replace(v, witness=replace(v.witness, cycle_path=()))
    assert not validate_fa_witness(G_untimed, broken)


# --- properties --------------------------------------------------------------


@given(seeds, st.integers(min_value=0, max_value=3))
def test_agrees_with_brute_force_oracle(seed, k):
    a = random_fa(random.Random(seed))
    v = check_k_predictable(a, k)
    assert v.predictable == fa_oracle_k_predictable(a, k)
    if not v.predictable:
        assert validate_fa_witness(a, v)


@given(seeds)
def test_zero_predictability_matches_gl_oracle(seed):
    a = random_fa(random.Random(seed))
    assert predictable_fa(a) == check_k_predictable(a, 0).predictable == gl_oracle(a)


@given(seeds)
def test_max_k_is_the_predictability_threshold(seed):
    a = random_fa(random.Random(seed))
    m = max_k(a)
    if m == NOT_PREDICTABLE:
        assert not check_k_predictable(a, 0).predictable
    elif m == INF:
        assert check_k_predictable(a, 6).predictable
    else:
        assert check_k_predictable(a, m).predictable
        if m < kappa(a):
            assert not check_k_predictable(a, m + 1).predictable
        else:
            # capped at κ: nothing is confusable at any bound
            assert m == kappa(a)
            assert all(check_k_predictable(a, k).predictable for k in range(m, m + 4))


@given(seeds, st.integers(min_value=1, max_value=4))
def test_monotone_in_k(seed, k):
    a = random_fa(random.Random(seed))
    assert compute_Fk(a, k - 1) <= compute_Fk(a, k)
    if check_k_predictable(a, k).predictable:
        assert check_k_predictable(a, k - 1).predictable
