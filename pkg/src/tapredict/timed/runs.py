"""Concrete runs: exact replay and grid search over silent schedules."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from ..automata import EPSILON
from .automaton import TimedAutomaton, TimedWord
from .constraints import as_fraction


class ReplayError(ValueError):
    def __init__(self, step, message):
        self.step = step
        super().__init__(f"step {step}: {message}")


@dataclass(frozen=True)
class RunStep:
    """A delay followed by a discrete move along `edge` (None: delay only)."""

    delay: Fraction
    edge: object = None


def _val(valuation):
    return tuple(sorted(valuation.items()))


def replay(ta: TimedAutomaton, steps, start=None):
    """Follow `steps` exactly; return the final ``(location, valuation)``.

    Raises ReplayError naming the first step that violates a guard, an
    invariant or the edge structure.
    """
    if start is None:
        loc, v = ta.initial, {x: Fraction(0) for x in ta.clocks}
    else:
        loc, v = start[0], {x: Fraction(c) for x, c in start[1].items()}
    if not ta.inv(loc).holds(v):
        raise ReplayError(0, f"initial invariant of {loc} violated")
    for i, st in enumerate(steps):
        d = as_fraction(st.delay)
        if d < 0:
            raise ReplayError(i, "negative delay")
        v = {x: c + d for x, c in v.items()}
        if not ta.inv(loc).holds(v):
            raise ReplayError(i, f"invariant of {loc} violated after delay {d}")
        e = st.edge
        if e is None:
            continue
        if e.src != loc:
            raise ReplayError(i, f"edge leaves {e.src} but the run is in {loc}")
        if e not in ta.edges:
            raise ReplayError(i, "edge does not belong to the automaton")
        if not e.guard.holds(v):
            raise ReplayError(i, f"guard {e.guard} false at {_show(v)}")
        v = {x: (Fraction(0) if x in e.resets else c) for x, c in v.items()}
        loc = e.dst
        if not ta.inv(loc).holds(v):
            raise ReplayError(i, f"invariant of {loc} violated on entry")
    return loc, v


def _show(v):
    return "{" + ", ".join(f"{x}={c}" for x, c in sorted(v.items())) + "}"


def run_trace(steps, observable=None):
    """Timed word of a run; unobservable events are kept unless `observable`
    is given."""
    stamps, now = [], Fraction(0)
    for st in steps:
        now += as_fraction(st.delay)
        if st.edge is not None and st.edge.label != EPSILON:
            if observable is None or st.edge.label in observable:
                stamps.append((now, st.edge.label))
    return TimedWord.from_timestamps(stamps, end=now)


@dataclass(frozen=True)
class RunResult:
    accepted: bool
    states: frozenset  # of (location, ((clock, value), ...))


def concrete_run(ta: TimedAutomaton, word: TimedWord, visible=None, forbidden=(),
                 grid=None, max_silent=4) -> RunResult:
    """Decide whether `word` is the `visible` trace of some run of `ta`.

    Events outside `visible` (default: the observable ones) and ε-edges are
    taken silently, only at multiples of the grid step and at most
    `max_silent` times per instant.  Edges labelled in `forbidden` are never
    taken.  With integer constants a grid of ``1 / (2·L)``, L the lcm of the
    word's denominators, separates every region the word can distinguish.
    """
    visible = ta.alphabet.observable if visible is None else frozenset(visible)
    forbidden = frozenset(forbidden)
    if grid is None:
        grid = Fraction(1, 2 * word.denominators_lcm())
    grid = as_fraction(grid)
    out = ta.out_edges()
    silent = {
        q: [e for e in out[q] if e.label not in forbidden and e.label not in visible]
        for q in ta.locations
    }

    def take(states, edges_of):
        new = set()
        for loc, v in states:
            val = dict(v)
            for e in edges_of(loc):
                if not e.guard.holds(val):
                    continue
                nv = {x: (Fraction(0) if x in e.resets else c) for x, c in val.items()}
                if ta.inv(e.dst).holds(nv):
                    new.add((e.dst, _val(nv)))
        return new

    def closure(states):
        frontier = set(states)
        result = set(states)
        for _ in range(max_silent):
            frontier = take(frontier, lambda q: silent[q]) - result
            if not frontier:
                break
            result |= frontier
        return result

    def delay(states, d):
        new = set()
        for loc, v in states:
            nv = {x: c + d for x, c in v}
            if ta.inv(loc).holds(nv):
                new.add((loc, _val(nv)))
        return new

    def elapse(states, d):
        states = closure(states)
        n, rest = divmod(d, grid)
        for _ in range(int(n)):
            states = closure(delay(states, grid))
        if rest:
            states = closure(delay(states, rest))
        return states

    start = {x: Fraction(0) for x in ta.clocks}
    states = set()
    if ta.inv(ta.initial).holds(start):
        states = {(ta.initial, _val(start))}
    for d, a in zip(word.delays, word.events):
        states = elapse(states, d)
        states = take(states, lambda q, a=a: [e for e in out[q] if e.label == a and a not in forbidden])
        if not states:
            break
    if states:
        states = elapse(states, word.delays[-1])
    return RunResult(bool(states), frozenset(states))
