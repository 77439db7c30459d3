import random
from fractions import Fraction

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from tapredict.automata import EPSILON, INF, EventAlphabet, ModelError
from tapredict.timed.automaton import TaEdge, TimedAutomaton, TimedWord, ta_product
from tapredict.timed.buchi import buchi_empty, find_accepting_lasso, tarjan_scc
from tapredict.timed.constraints import TRUE, ClockConstraint, GuardSyntaxError, atom
from tapredict.timed.dbm import Zone
from tapredict.timed.reach import location_reachable, min_time_bound
from tapredict.timed.regions import DELAY, local_constants, region_graph
from tapredict.timed.runs import ReplayError, RunStep, concrete_run, replay

CLOCKS = ("x", "y")
ABC = EventAlphabet({"a", "b"}, {"f"}, "f")

ops = st.sampled_from(["<", "<=", "==", ">=", ">"])
atoms = st.tuples(st.sampled_from(CLOCKS), ops, st.integers(0, 4))
constraints = st.lists(atoms, max_size=3).map(lambda a: ClockConstraint(tuple(a)))
values = st.fractions(min_value=0, max_value=6, max_denominator=4)
valuations = st.fixed_dictionaries({x: values for x in CLOCKS})


def zone_from(cons):
    return Zone.universe(CLOCKS) & cons


# --- clock constraints ---------------------------------------------------------


def test_guard_grammar():
    g = ClockConstraint.parse("x<1 && y>=2")
    assert g.atoms == (("x", "<", 1), ("y", ">=", 2))
    assert ClockConstraint.parse("true") == TRUE
    assert str(ClockConstraint.parse(" x == 3 ")) == "x==3"
    with pytest.raises(GuardSyntaxError) as exc:
        ClockConstraint.parse("x<1 && y=>2")
    assert exc.value.column == 8
    with pytest.raises(ModelError):
        atom("x", "<", -1)


# --- zones ---------------------------------------------------------------------


@given(constraints, valuations)
def test_zone_membership_matches_constraint(cons, v):
    assert zone_from(cons).contains(v) == cons.holds(v)


@given(constraints, constraints)
def test_zone_intersection_and_inclusion(c1, c2):
    z1, z2 = zone_from(c1), zone_from(c2)
    both = z1 & c2
    assert z1.includes(both) and z2.includes(both)
    assert both == zone_from(c1 & c2)


@given(constraints)
def test_canonical_form_is_idempotent(cons):
    z = zone_from(cons)
    assume(not z.empty)
    again = Zone(z.clocks, [row[:] for row in z.m])
    assert again.constrain(1, 0, z.m[1][0]) == z


@given(constraints, valuations, values)
def test_up_contains_delayed_points(cons, v, d):
    z = zone_from(cons)
    assume(z.contains(v))
    assert z.up().contains({x: c + d for x, c in v.items()})


@given(constraints, valuations, values)
def test_down_contains_earlier_points(cons, v, d):
    z = zone_from(cons)
    later = {x: c + d for x, c in v.items()}
    assume(z.contains(later))
    assert z.down().contains(v)


@given(constraints, valuations)
def test_reset_and_free(cons, v):
    z = zone_from(cons)
    assume(z.contains(v))
    assert z.reset(["x"]).contains({**v, "x": 0})
    assert z.free(["x"]).contains({**v, "x": Fraction(17, 3)})


@given(constraints)
def test_pick_lies_in_zone(cons):
    z = zone_from(cons)
    assume(not z.empty)
    assert z.contains(z.pick())


@given(constraints, valuations)
def test_extrapolation_only_grows(cons, v):
    z = zone_from(cons)
    assert z.extrapolate({"x": 2, "y": 2}).includes(z)


def test_empty_zone_detected():
    z = zone_from(ClockConstraint.parse("x<1 && x>2"))
    assert z.empty


# --- automata and words --------------------------------------------------------


def test_timed_word_parse_and_project():
    w = TimedWord.parse("1 a 2 c 0.5")
    assert w.timestamps() == [(1, "a"), (3, "c")]
    assert w.duration == Fraction(7, 2)
    assert w.project({"c"}).timestamps() == [(3, "c")]
    assert str(TimedWord.from_timestamps([(Fraction(1, 2), "a")], end=1)) == "1/2 a 1/2"
    with pytest.raises(ValueError):
        TimedWord((1,), ("a",))


def test_invariant_must_be_upper_bound():
    with pytest.raises(ModelError):
        TimedAutomaton(("p",), "p", ("x",), ABC, (), {"p": atom("x", ">", 1)})


def test_product_with_neutral_automaton_is_isomorphic(B):
    neutral = TimedAutomaton(
        ("n",), "n", (), B.alphabet,
        tuple(TaEdge("n", TRUE, ev, (), "n") for ev in sorted(B.alphabet.events)),
    )
    prod = ta_product(B, neutral)
    assert len(prod.locations) == len(B.locations)
    assert len(prod.edges) == len(B.edges)


def test_product_epsilon_moves_are_interleaved(B):
    other = TimedAutomaton(("m",), "m", ("z",), B.alphabet, (TaEdge("m", TRUE, EPSILON, {"z"}, "m"),),
                           {"m": atom("z", "<=", 1)})
    prod = ta_product(B, other)
    eps = [e for e in prod.edges if e.label == EPSILON]
    # B's ε-edge moves alone, the other ε-loop moves alone
    assert any(e.resets == frozenset({"x"}) for e in eps)
    assert any(e.resets == frozenset({"z"}) and prod.components[e.src][0] == prod.components[e.dst][0] for e in eps)


# --- concrete runs -------------------------------------------------------------


def test_G_word_reaching_l2(G):
    r = concrete_run(G, TimedWord.parse("1 a 2 c"))
    assert r.accepted
    assert ("l2", (("x", 0),)) in r.states


def test_G_word_through_d(G):
    r = concrete_run(G, TimedWord.parse("0.5 a"))
    assert r.accepted
    assert {loc for loc, _ in r.states} == {"l4"}
    assert not concrete_run(G, TimedWord.parse("0.5 a"), forbidden={"d"}).accepted


def test_empty_word_accepted_at_initial(G):
    r = concrete_run(G, TimedWord.parse("0"))
    assert r.accepted and ("l0", (("x", 0),)) in r.states


def test_replay_reports_first_bad_step(B):
    eps = next(e for e in B.edges if e.label == EPSILON)
    loop = next(e for e in B.edges if e.src == "l1" and e.label == "a")
    assert replay(B, [RunStep(Fraction(1, 2), eps), RunStep(1, loop)]) == ("l1", {"x": 0})
    with pytest.raises(ReplayError) as exc:
        replay(B, [RunStep(Fraction(1, 2), eps), RunStep(Fraction(1, 2), loop)])
    assert exc.value.step == 1


# --- regions -------------------------------------------------------------------


def one_clock(maxc):
    return TimedAutomaton(("p",), "p", ("x",), ABC, (TaEdge("p", atom("x", "<=", maxc), "a", (), "p"),))


def test_region_count_one_clock():
    g = region_graph(one_clock(1))
    assert sorted(g.describe(n) for n in range(len(g))) == sorted(
        ["p | x=0", "p | x∈(0,1)", "p | x=1", "p | x>1"]
    )


def test_delay_chain_ends_in_unbounded_region():
    g = region_graph(one_clock(2))
    v = g.initial
    seen = [v]
    while True:
        nxt = [w for w, a in g.out(v) if a is DELAY]
        if not nxt:
            break
        v = nxt[0]
        seen.append(v)
    assert g.describe(seen[-1]) == "p | x>2"
    assert len(seen) == len(set(seen)) == 6


def test_initial_invariant_bounds_delays():
    ta = TimedAutomaton(("p",), "p", ("x",), ABC, (), {"p": atom("x", "<=", 0)})
    g = region_graph(ta)
    assert len(g) == 1 and not g.out(g.initial)


def test_local_constants_drop_clock_after_reset(B):
    m = local_constants(B)
    assert m["l0"] == {"x": 8}
    assert m["l1"] == {"x": 1}


def _step_regions(g, loc, before, delay):
    """Region ids visited by a delay, following delay edges."""
    v = g.region_of(loc, before)
    target = g.region_of(loc, {x: c + delay for x, c in before.items()})
    path = [v]
    while v != target:
        nxt = [w for w, a in g.out(v) if a is DELAY]
        assert nxt, "delay left the region graph"
        v = nxt[0]
        path.append(v)
    return v


@pytest.mark.parametrize("seed", range(20))
def test_concrete_runs_of_B_follow_region_paths(B, seed):
    rng = random.Random(seed)
    g = region_graph(B)
    loc, val = B.initial, {"x": Fraction(0)}
    for _ in range(12):
        assert g.region_of(loc, val) is not None
        d = Fraction(rng.randint(0, 8), rng.choice([1, 2, 3, 4]))
        later = {x: c + d for x, c in val.items()}
        if not B.inv(loc).holds(later):
            continue
        v = _step_regions(g, loc, val, d)
        loc, val = loc, later
        enabled = [e for e in B.edges if e.src == loc and e.guard.holds(val)]
        if not enabled:
            continue
        e = rng.choice(enabled)
        nval = {x: (Fraction(0) if x in e.resets else c) for x, c in val.items()}
        if not B.inv(e.dst).holds(nval):
            continue
        k = B.edges.index(e)
        w = g.region_of(e.dst, nval)
        assert (w, k) in g.out(v)
        loc, val = e.dst, nval


# --- Büchi emptiness -----------------------------------------------------------


def test_tarjan_on_small_graph():
    succ = [[(1, "a")], [(0, "b"), (2, "c")], []]
    comps = tarjan_scc(3, succ)
    assert sorted(map(sorted, comps)) == [[0, 1], [2]]


def test_unreachable_repeated_node_is_empty():
    succ = [[(1, None)], [(0, None)], [(2, None)]]
    assert find_accepting_lasso(3, succ, {2}) is None


def test_repeated_self_loop_at_initial():
    lasso = find_accepting_lasso(1, [[(0, "t")]], {0})
    assert lasso.stem == () and lasso.cycle == ((0, "t", 0),)


def test_lasso_through_repeated_node():
    succ = [[(1, "a")], [(2, "b")], [(1, "c"), (3, "d")], [(3, "e")]]
    lasso = find_accepting_lasso(4, succ, {2})
    nodes = lasso.nodes()
    assert nodes[0] == 0 and 2 in nodes[len(lasso.stem):]
    assert lasso.cycle[0][0] == lasso.cycle[-1][2]


@given(st.integers(0, 2**31))
def test_buchi_agrees_with_naive_cycle_search(seed):
    rng = random.Random(seed)
    n = rng.randint(1, 7)
    succ = [[(rng.randrange(n), i) for i in range(rng.randint(0, 2))] for _ in range(n)]
    rep = {v for v in range(n) if rng.random() < 0.3}
    lasso = find_accepting_lasso(n, succ, rep)
    reach = {0}
    stack = [0]
    while stack:
        v = stack.pop()
        for w, _ in succ[v]:
            if w not in reach:
                reach.add(w)
                stack.append(w)

    def on_cycle(r):
        seen, stack = set(), [w for w, _ in succ[r]]
        while stack:
            v = stack.pop()
            if v == r:
                return True
            if v not in seen:
                seen.add(v)
                stack.extend(w for w, _ in succ[v])
        return False

    expected = any(r in reach and on_cycle(r) for r in rep)
    assert (lasso is not None) == expected
    if lasso is not None:
        for src, a, dst in lasso.path:
            assert (dst, a) in succ[src]
        assert any(v in rep for v in lasso.nodes()[len(lasso.stem):])


def test_buchi_empty_on_region_graph(B):
    g = region_graph(B)
    empty, lasso = buchi_empty(g)
    assert not empty and lasso is not None


# --- reachability and minimum time ---------------------------------------------


def test_min_time_bound(G, B):
    assert min_time_bound(B) == 6
    assert min_time_bound(G) == 5


def test_min_time_bound_without_fault(B):
    no_f = B.replace(edges=tuple(e for e in B.edges if e.label != "f"))
    assert min_time_bound(no_f) == INF


def test_min_time_matches_grid_search(G):
    # exhaustive half-unit schedules of "a then c", earliest instant f is enabled
    grid = [Fraction(i, 2) for i in range(17)]
    best = None
    for ta_ in grid:
        for tc in (t for t in grid if t >= ta_):
            for end in (t for t in grid if t >= tc):
                if best is not None and end >= best:
                    break
                w = TimedWord.from_timestamps([(ta_, "a"), (tc, "c")], end=end)
                r = concrete_run(G, w, grid=Fraction(1, 2))
                if any(loc == "l2" and dict(v)["x"] >= 2 for loc, v in r.states):
                    best = end
    assert best == 5


def test_location_reachable(B):
    assert location_reachable(B, {"l1"})
    assert location_reachable(B, {"sink"})
