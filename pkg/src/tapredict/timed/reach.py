"""Zone-based forward reachability and minimum-time bounds."""

from __future__ import annotations

from collections import deque
from fractions import Fraction

from ..automata import INF
from .automaton import TimedAutomaton
from .dbm import Zone


def _fresh(name, taken):
    while name in taken:
        name += "_"
    return name


def fault_guards(ta: TimedAutomaton, fault=None):
    """``{location: [constraint, ...]}`` of valuations where an f-edge can fire.

    An edge is enabled when its guard holds and the target invariant holds
    after the reset.
    """
    fault = ta.fault if fault is None else fault
    out = {}
    for e in ta.edges:
        if e.label != fault:
            continue
        after = ta.inv(e.dst).after_reset(e.resets)
        if after is None:
            continue
        out.setdefault(e.src, []).append(e.guard & after)
    return out


def _explore(ta, starts, goal, clocks, bound_clock=None, bound=None, edge_filter=None,
             extrapolate=True):
    """Forward zone search; returns the first ``(loc, zone)`` meeting `goal`."""
    maxc = ta.max_constants()
    if bound_clock is not None:
        maxc[bound_clock] = bound

    def close(loc, z):
        z = z & ta.inv(loc)
        if bound_clock is not None:
            z = z.constrain_atom(bound_clock, "<=", bound)
        z = z.up() & ta.inv(loc)
        if bound_clock is not None:
            z = z.constrain_atom(bound_clock, "<=", bound)
        return z.extrapolate(maxc) if extrapolate else z

    out = ta.out_edges()
    passed = {}
    queue = deque()
    for loc, z in starts:
        z = close(loc, z)
        if not z.empty:
            queue.append((loc, z))
    while queue:
        loc, z = queue.popleft()
        stored = passed.setdefault(loc, [])
        if any(s.includes(z) for s in stored):
            continue
        stored[:] = [s for s in stored if not z.includes(s)] + [z]
        if goal(loc, z):
            return loc, z
        for e in out[loc]:
            if edge_filter is not None and not edge_filter(e):
                continue
            z2 = (z & e.guard).reset(e.resets)
            if z2.empty:
                continue
            z2 = close(e.dst, z2)
            if not z2.empty:
                queue.append((e.dst, z2))
    return None


def _fault_goal(ta, guards):
    def goal(loc, z):
        return any(not (z & g).empty for g in guards.get(loc, ()))

    return goal


def location_reachable(ta: TimedAutomaton, targets) -> bool:
    """Whether some location in `targets` is reachable (zone graph)."""
    targets = set(targets)
    start = [(ta.initial, Zone.zero(ta.clocks))]
    return _explore(ta, start, lambda loc, z: loc in targets, ta.clocks) is not None


def reachable_locations(ta: TimedAutomaton) -> set:
    """Locations some run of `ta` visits (zone graph)."""
    seen = set()

    def goal(loc, z):
        seen.add(loc)
        return False

    _explore(ta, [(ta.initial, Zone.zero(ta.clocks))], goal, ta.clocks)
    return seen


def fault_reachable(ta: TimedAutomaton, fault_free=True) -> bool:
    guards = fault_guards(ta)
    keep = (lambda e: e.label != ta.fault) if fault_free else None
    start = [(ta.initial, Zone.zero(ta.clocks))]
    return _explore(ta, start, _fault_goal(ta, guards), ta.clocks, edge_filter=keep) is not None


def reachable_within(ta: TimedAutomaton, valuation: dict, location: str, bound) -> bool:
    """Whether an f-edge can fire within `bound` time units of the state
    ``(location, valuation)``, along a fault-free run."""
    t = _fresh("t_elapsed", set(ta.clocks))
    clocks = ta.clocks + (t,)
    point = dict(valuation)
    point[t] = 0
    start = [(location, Zone.point(clocks, point))]
    guards = fault_guards(ta)
    bound = Fraction(bound)
    wide = ta.replace(clocks=clocks)
    # exact search: the start point may carry fractional values
    return _explore(
        wide, start, _fault_goal(ta, guards), clocks,
        bound_clock=t, bound=bound, edge_filter=lambda e: e.label != ta.fault,
        extrapolate=False,
    ) is not None


def min_time_bound(ta: TimedAutomaton):
    """Smallest integer B such that an f-edge can fire at some time ≤ B along
    a fault-free run from the initial state; ``INF`` when it never can."""
    if not fault_reachable(ta):
        return INF
    t = _fresh("t_elapsed", set(ta.clocks))
    clocks = ta.clocks + (t,)
    wide = ta.replace(clocks=clocks)
    guards = fault_guards(ta)
    goal = _fault_goal(ta, guards)
    keep = lambda e: e.label != ta.fault  # noqa: E731

    def within(b):
        start = [(ta.initial, Zone.zero(clocks))]
        return _explore(wide, start, goal, clocks, bound_clock=t, bound=b, edge_filter=keep) is not None

    hi = 1
    while not within(hi):
        hi *= 2
    lo = hi // 2 if hi > 1 else -1
    if lo == -1 and within(0):
        return 0
    lo = max(lo, 0)
    # within(lo) is false (or lo == 0 and false), within(hi) is true
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if within(mid):
            hi = mid
        else:
            lo = mid
    return hi
