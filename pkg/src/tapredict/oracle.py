"""Brute-force semantics used to cross-check the decision procedures.

Nothing here shares code with the twin-plant constructions: the finite
automaton oracles work on sets of states reached by observed words, and
timed witnesses are checked by exact replay plus zone reachability.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .automata import EPSILON, EventAlphabet, FaEdge, FiniteAutomaton, UntimedWord
from .fa_predict import FaVerdict
from .ta_predict import TaVerdict, normalize
from .timed.automaton import TaEdge, TimedAutomaton
from .timed.constraints import TRUE, ClockConstraint
from .timed.reach import reachable_within
from .timed.runs import ReplayError, replay, run_trace

MAX_LOCATIONS = 10


class OracleRefused(ValueError):
    pass


def _cap(a):
    if len(a.locations) > MAX_LOCATIONS:
        raise OracleRefused(f"oracle limited to {MAX_LOCATIONS} locations")


def _succ(a, fault_free=True):
    out = {q: [] for q in a.locations}
    for e in a.edges:
        if not (fault_free and e.label == a.fault):
            out[e.src].append(e)
    return out


def _fault_within(a, k):
    """Locations from which some fault-free path of ≤ k steps ends where f is
    enabled, by depth-limited search."""
    succ = _succ(a)
    enabled = {e.src for e in a.edges if e.label == a.fault}

    @lru_cache(maxsize=None)
    def dfs(q, budget):
        if q in enabled:
            return True
        return budget > 0 and any(dfs(e.dst, budget - 1) for e in succ[q])

    return {q for q in a.locations if dfs(q, k)}


def _long_fault_free(a, n):
    """Locations starting a fault-free path with at least `n` events."""
    succ = _succ(a)
    memo = {}

    def can(q, need):
        if need <= 0:
            return True
        key = (q, need)
        if key not in memo:
            memo[key] = False  # guards against ε-cycles
            memo[key] = any(
                can(e.dst, need - (e.label != EPSILON and e.label in a.alphabet.events))
                for e in succ[q]
            )
        return memo[key]

    return {q for q in a.locations if can(q, n)}


def _infinite_fault_free(a):
    """Locations starting a fault-free path of |L| steps, hence a cycle."""
    succ = _succ(a)
    n = len(a.locations)

    @lru_cache(maxsize=None)
    def dfs(q, depth):
        return depth == 0 or any(dfs(e.dst, depth - 1) for e in succ[q])

    return {q for q in a.locations if dfs(q, n)}


def _silent_closure(a, states, succ):
    obs = a.alphabet.observable
    seen = set(states)
    stack = list(states)
    while stack:
        q = stack.pop()
        for e in succ[q]:
            if e.label not in obs and e.dst not in seen:
                seen.add(e.dst)
                stack.append(e.dst)
    return frozenset(seen)


def _observation_sets(a, depth):
    """Sets S(o) of end states of fault-free runs observing o, |o| ≤ depth."""
    succ = _succ(a)
    start = _silent_closure(a, {a.initial}, succ)
    seen = {start}
    queue = deque([(start, 0)])
    while queue:
        s, d = queue.popleft()
        yield s
        if d == depth:
            continue
        for ev in sorted(a.alphabet.observable):
            nxt = {e.dst for q in s for e in succ[q] if e.label == ev}
            if not nxt:
                continue
            t = _silent_closure(a, nxt, succ)
            if t not in seen:
                seen.add(t)
                queue.append((t, d + 1))


def fa_oracle_k_predictable(a: FiniteAutomaton, k: int) -> bool:
    """k-predictability by exhaustive exploration of observed words.

    Words up to length N = |L|·|L| + k + 1 are explored; by pumping, any
    confusing observation has a representative of at most that length.
    The search memoizes the set of states each observation reaches, which
    is what makes exhaustive enumeration affordable.
    """
    _cap(a)
    fk = _fault_within(a, k)
    inf = _infinite_fault_free(a)
    n = len(a.locations)
    depth = n * n + k + 1
    for s in _observation_sets(a, depth):
        if s & fk and s & inf:
            return False
    return True


def gl_oracle(a: FiniteAutomaton) -> bool:
    """Predictability in the sense of Genc and Lafortune.

    A is predictable iff for some n, every fault-free trace ending where f
    is enabled has a prefix t such that every fault-free trace observed
    like t can only continue for n events if f occurs.  With n = |L|² (at
    least |L| + 1) a long fault-free continuation implies an infinite one,
    so larger n changes nothing.
    """
    _cap(a)
    size = len(a.locations)
    n = max(size * size, size + 1)
    enabled = {e.src for e in a.edges if e.label == a.fault}
    long_ff = _long_fault_free(a, n)
    succ = _succ(a)
    start = _silent_closure(a, {a.initial}, succ)

    def fails(s):  # P(t) is false for observations reaching s
        return bool(s & long_ff)

    if not fails(start):
        return True
    seen = {start}
    queue = deque([start])
    while queue:
        s = queue.popleft()
        if s & enabled:
            return False
        for ev in sorted(a.alphabet.observable):
            nxt = {e.dst for q in s for e in succ[q] if e.label == ev}
            if not nxt:
                continue
            t = _silent_closure(a, nxt, succ)
            if t not in seen and fails(t):
                seen.add(t)
                queue.append(t)
    return True


@dataclass(frozen=True)
class BoundedLanguage:
    """Observed words of length ≤ n with two annotations each: some fault-free
    run observing the word ends within k steps of the fault, and some ends
    where an infinite fault-free run starts."""

    words: dict  # observed word -> (ends_in_Fk, ends_in_F_not_f)

    def confusing(self) -> list:
        return sorted(w for w, (pre, non) in self.words.items() if pre and non)


def bounded_language(a: FiniteAutomaton, n: int, k: int) -> BoundedLanguage:
    _cap(a)
    fk = _fault_within(a, k)
    inf = _infinite_fault_free(a)
    succ = _succ(a)
    obs = a.alphabet.observable
    words = {}
    # runs of length ≤ n + |L| so that n observed events are reachable
    limit = n + len(a.locations) * (n + 1)
    stack = [(a.initial, (), 0)]
    while stack:
        q, w, steps = stack.pop()
        pre, non = words.get(w, (False, False))
        words[w] = (pre or q in fk, non or q in inf)
        if steps == limit:
            continue
        for e in succ[q]:
            w2 = w + (e.label,) if e.label in obs else w
            if len(w2) <= n:
                stack.append((e.dst, w2, steps + 1))
    return BoundedLanguage(words)


# --------------------------------------------------------------------------
# witness validation


@dataclass(frozen=True)
class Validation:
    valid: bool
    reason: str = ""

    def __bool__(self):
        return self.valid


def _fa_path_ok(a, path, start):
    q = start
    for i, e in enumerate(path):
        if e not in a.edges:
            return None, f"edge {i} ({e.src} -{e.label}-> {e.dst}) is not in the automaton"
        if e.src != q:
            return None, f"edge {i} leaves {e.src}, expected {q}"
        if e.label == a.fault:
            return None, f"edge {i} is the fault"
        q = e.dst
    return q, ""


def validate_fa_witness(a: FiniteAutomaton, verdict: FaVerdict) -> Validation:
    w = verdict.witness
    if w is None:
        return Validation(False, "no witness")
    end, why = _fa_path_ok(a, w.prefaulty_path, a.initial)
    if end is None:
        return Validation(False, "prefaulty run: " + why)
    if end not in _fault_within(a, verdict.k):
        return Validation(False, f"prefaulty run ends in {end}, not within {verdict.k} steps of f")
    mid, why = _fa_path_ok(a, w.stem_path, a.initial)
    if mid is None:
        return Validation(False, "stem: " + why)
    if not w.cycle_path:
        return Validation(False, "empty cycle")
    last, why = _fa_path_ok(a, w.cycle_path, mid)
    if last is None:
        return Validation(False, "cycle: " + why)
    if last != mid:
        return Validation(False, "cycle does not return to its start")
    if UntimedWord.of_path(w.prefaulty_path) != w.prefaulty:
        return Validation(False, "prefaulty word does not match its run")
    if UntimedWord.of_path(w.stem_path) != w.stem or UntimedWord.of_path(w.cycle_path) != w.cycle:
        return Validation(False, "lasso words do not match their runs")
    if not 0 <= w.split <= len(w.stem_path):
        return Validation(False, "split point outside the stem")
    proj = a.alphabet.project
    if proj(w.prefaulty.events) != proj(e.label for e in w.stem_path[: w.split]):
        return Validation(False, "observations differ")
    return Validation(True)


def _timestamps(steps, observable):
    return run_trace(steps, observable).timestamps()


def validate_ta_witness(a, verdict: TaVerdict) -> Validation:
    w = verdict.witness
    if w is None:
        return Validation(False, "no witness")
    n = normalize(a)
    if w.scale != 1:
        n = n.scaled(w.scale)
    ta = n.ta
    f = ta.fault
    obs = ta.alphabet.observable
    horizon = verdict.delta * (verdict.sampling.period if verdict.sampling else 1)
    try:
        loc, val = replay(ta, w.prefix_steps)
    except ReplayError as exc:
        return Validation(False, f"prefix run: {exc}")
    if any(s.edge is not None and s.edge.label == f for s in w.prefix_steps):
        return Validation(False, "prefix run contains the fault")
    if sum((s.delay for s in w.prefix_steps), Fraction(0)) != w.switch_time:
        return Validation(False, "prefix duration differs from the switch time")
    if verdict.sampling and w.switch_time % verdict.sampling.period:
        return Validation(False, "switch does not happen at a sampling instant")
    try:
        replay(ta, w.twin_steps, start=(loc, val))
    except ReplayError as exc:
        return Validation(False, f"continuation to the fault: {exc}")
    labels = [s.edge.label for s in w.twin_steps if s.edge is not None]
    if not labels or labels[-1] != f or f in labels[:-1]:
        return Validation(False, "continuation must end with the fault and only there")
    if w.fault_time - w.switch_time > horizon:
        return Validation(False, "fault beyond the anticipation bound")
    if not reachable_within(ta, val, loc, horizon):
        return Validation(False, "fault not reachable within the bound (zone check)")
    try:
        replay(ta, w.nonfaulty_steps)
    except ReplayError as exc:
        return Validation(False, f"fault-free run: {exc}")
    if any(s.edge is not None and s.edge.label == f for s in w.nonfaulty_steps):
        return Validation(False, "fault-free run contains the fault")
    cycle = w.nonfaulty_steps[w.cycle_start:]
    if not cycle:
        return Validation(False, "empty cycle")
    locs = [ta.initial] + [s.edge.dst for s in w.nonfaulty_steps if s.edge is not None]
    if locs[w.cycle_start] != locs[-1]:
        return Validation(False, "cycle does not return to its start location")
    seen = _timestamps(w.prefix_steps, obs)
    other = _timestamps(w.nonfaulty_steps[: w.split], obs)
    if seen != other:
        return Validation(False, "observations differ before the switch")
    after = _timestamps(w.nonfaulty_steps, obs)[len(other):]
    if after and after[0][0] < w.switch_time:
        return Validation(False, "fault-free run observes more before the switch")
    return Validation(True)


def validate_witness(a, verdict) -> Validation:
    if isinstance(verdict, FaVerdict):
        return validate_fa_witness(a, verdict)
    return validate_ta_witness(a, verdict)


# --------------------------------------------------------------------------
# random models


def random_fa(rng: random.Random, max_locations=6, max_events=3, edge_factor=2.0) -> FiniteAutomaton:
    """Random automaton with a fault event; ε-edges only go forward so there
    is no cycle of silent moves."""
    n = rng.randint(1, max_locations)
    locs = [f"q{i}" for i in range(n)]
    n_events = rng.randint(1, max_events)
    others = ["a", "b", "c"][: n_events - 1]
    events = others + ["f"]
    observable = {e for e in others if rng.random() < 0.7}
    if rng.random() < 0.2:
        observable.add("f")
    alphabet = EventAlphabet(observable, set(events) - observable, "f")
    m = rng.randint(n, max(n, int(edge_factor * n)) + 1)
    edges = set()
    for _ in range(m):
        i, j = rng.randrange(n), rng.randrange(n)
        label = rng.choice(events + [EPSILON] if n > 1 else events)
        if label == EPSILON:
            if i == j:
                continue
            i, j = min(i, j), max(i, j)
        edges.add(FaEdge(locs[i], label, locs[j]))
    return FiniteAutomaton(tuple(locs), locs[0], tuple(sorted(edges, key=lambda e: (e.src, e.label, e.dst))), alphabet)


def _random_guard(rng, clocks, max_const, upper_only=False):
    ops = ("<", "<=") if upper_only else ("<", "<=", "==", ">", ">=")
    atoms = []
    for x in clocks:
        if rng.random() < 0.5:
            atoms.append((x, rng.choice(ops), rng.randint(0 if not upper_only else 1, max_const)))
    return ClockConstraint(tuple(atoms)) if atoms else TRUE


def random_bounded_ta(rng: random.Random, max_locations=4, max_clocks=2, max_const=4,
                      with_fault=False) -> TimedAutomaton:
    """Random timed automaton in which every location bounds some clock."""
    n = rng.randint(1, max_locations)
    locs = [f"q{i}" for i in range(n)]
    clocks = ["x", "z"][: rng.randint(1, max_clocks)]
    alphabet = EventAlphabet({"a", "b"}, {"c", "f"}, "f")
    invs = {}
    for q in locs:
        x = rng.choice(clocks)
        invs[q] = ClockConstraint(((x, rng.choice(("<", "<=")), rng.randint(1, max_const)),))
    labels = ["a", "b", "c", EPSILON] + (["f"] if with_fault else [])
    edges = []
    for _ in range(rng.randint(n, 2 * n + 1)):
        src, dst = rng.choice(locs), rng.choice(locs)
        resets = frozenset(x for x in clocks if rng.random() < 0.5)
        edges.append(TaEdge(src, _random_guard(rng, clocks, max_const), rng.choice(labels), resets, dst))
    return TimedAutomaton(tuple(locs), locs[0], tuple(clocks), alphabet, tuple(edges), invs)
