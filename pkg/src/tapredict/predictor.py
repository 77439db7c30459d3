"""Online (α, Δ)-predictor over observed timed words.

The predictor keeps the set of fault-free states consistent with what it
has observed, as (location, zone) pairs, and answers 1 when one of them
can enable the fault within the anticipation bound.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .ta_predict import NormalizedTA, SamplingSpec, check_delta_predictable, normalize
from .timed.automaton import TimedWord
from .timed.constraints import as_fraction
from .timed.dbm import Zone
from .timed.reach import fault_guards

AUX = "aux#"


class InconsistentObservation(ValueError):
    """No fault-free run of the model explains the observation."""

    def __init__(self, time, event, message=None):
        self.time = time
        self.event = event
        what = f"event {event!r}" if event else "elapsed time"
        super().__init__(message or f"observation inconsistent with model: {what} at time {time}")


def _add(store: dict, loc, z: Zone) -> bool:
    """Insert unless subsumed; drop entries the new zone subsumes."""
    zs = store.setdefault(loc, [])
    if any(s.includes(z) for s in zs):
        return False
    zs[:] = [s for s in zs if not z.includes(s)]
    zs.append(z)
    return True


class _Engine:
    def __init__(self, n: NormalizedTA):
        self.n = n
        ta = n.ta
        self.ta = ta
        self.clocks = ta.clocks + (AUX,)
        f = ta.fault
        obs = ta.alphabet.observable
        out = ta.out_edges()
        self.silent = {q: [e for e in out[q] if e.label != f and e.label not in obs] for q in ta.locations}
        self.by_event = {}
        for e in ta.edges:
            if e.label != f and e.label in obs:
                self.by_event.setdefault((e.src, e.label), []).append(e)

    def closure(self, states, d):
        """States reachable after exactly `d` time units of silent behaviour."""
        ta = self.ta
        store = {}
        queue = deque()

        def push(loc, z):
            z = z & ta.inv(loc)
            z = (z.up() & ta.inv(loc)).constrain_atom(AUX, "<=", d)
            if not z.empty and _add(store, loc, z):
                queue.append((loc, z))

        for loc, z in states:
            push(loc, z.reset([AUX]))
        while queue:
            loc, z = queue.popleft()
            if z not in store.get(loc, ()):
                continue
            for e in self.silent[loc]:
                z2 = (z & e.guard).reset(e.resets)
                if not z2.empty:
                    push(e.dst, z2)
        result = []
        for loc in ta.locations:
            for z in store.get(loc, ()):
                z = z.constrain_atom(AUX, "==", d)
                if not z.empty:
                    result.append((loc, z.free([AUX])))
        return _prune(result)

    def fire(self, states, event):
        ta = self.ta
        out = []
        for loc, z in states:
            for e in self.by_event.get((loc, event), ()):
                z2 = ((z & e.guard).reset(e.resets)) & ta.inv(e.dst)
                if not z2.empty:
                    out.append((e.dst, z2))
        return _prune(out)


def _prune(pairs):
    store = {}
    order = []
    for loc, z in pairs:
        if loc not in store:
            order.append(loc)
        _add(store, loc, z)
    return tuple((loc, z) for loc in order for z in store[loc])


def _holds(z: Zone, valuation) -> bool:
    return z.free([c for c in z.clocks if c not in valuation]).contains(valuation)


@dataclass(frozen=True)
class StateEstimate:
    """Fault-free states consistent with the observation so far."""

    states: tuple
    time: Fraction = Fraction(0)

    def locations(self) -> set:
        return {loc for loc, _ in self.states}

    def is_empty(self) -> bool:
        return not self.states

    def contains(self, location, valuation) -> bool:
        """Membership; clocks missing from `valuation` are unconstrained."""
        return any(loc == location and _holds(z, valuation) for loc, z in self.states)


def initial_estimate(n) -> StateEstimate:
    n = normalize(n)
    eng = _engine(n)
    start = Zone.zero(eng.clocks)
    return StateEstimate(eng.closure([(n.ta.initial, start)], Fraction(0)), Fraction(0))


_ENGINES = {}


def _engine(n: NormalizedTA) -> _Engine:
    key = id(n)
    eng = _ENGINES.get(key)
    if eng is None or eng.n is not n:
        eng = _Engine(n)
        _ENGINES[key] = eng
    return eng


def step(n, estimate: StateEstimate, delay, event: Optional[str] = None) -> StateEstimate:
    """Let `delay` elapse silently, then observe `event` (if any)."""
    n = normalize(n)
    d = as_fraction(delay)
    if d < 0:
        raise ValueError("delay must be non-negative")
    eng = _engine(n)
    states = eng.closure(estimate.states, d)
    now = estimate.time + d
    if event is not None:
        if event not in n.ta.alphabet.observable:
            raise InconsistentObservation(now, event, f"{event!r} is not an observable event")
        states = eng.fire(states, event)
        states = eng.closure(states, Fraction(0))
    if not states:
        raise InconsistentObservation(now, event)
    return StateEstimate(states, now)


@dataclass(frozen=True)
class WinningSet:
    """States that can enable the fault within `bound` time units, fault-free."""

    zones: dict
    bound: Fraction

    def is_empty(self) -> bool:
        return not any(self.zones.values())

    def contains(self, location, valuation) -> bool:
        """Membership; clocks missing from `valuation` are unconstrained."""
        return any(_holds(z, valuation) for z in self.zones.get(location, ()))


def precompute_W(n, delta) -> WinningSet:
    """Backward fixpoint from the f-enabled states with an elapsed clock.

    The auxiliary clock is never reset, so walking backwards it measures
    the time still to go; it starts anywhere in ``[0, Δ]`` on the fault
    guards and must reach 0 at the states kept.
    """
    n = normalize(n)
    delta = as_fraction(delta)
    if delta < 0:
        raise ValueError("the bound must be non-negative")
    ta = n.ta
    eng = _engine(n)
    clocks = eng.clocks
    f = ta.fault
    preds = {q: [] for q in ta.locations}
    for e in ta.edges:
        if e.label != f:
            preds[e.dst].append(e)
    store = {}
    queue = deque()

    def push(loc, z):
        z = z & ta.inv(loc)
        if z.empty:
            return
        z = z.down() & ta.inv(loc)
        if _add(store, loc, z):
            queue.append((loc, z))

    top = Zone.universe(clocks).constrain_atom(AUX, "<=", delta)
    for loc, guards in fault_guards(ta).items():
        for g in guards:
            push(loc, top & g)
    while queue:
        loc, z = queue.popleft()
        if z not in store.get(loc, ()):
            continue
        for e in preds[loc]:
            pre = z
            for x in e.resets:
                pre = pre.constrain_atom(x, "==", 0)
            pre = pre.free(e.resets) & e.guard
            if not pre.empty:
                push(e.src, pre)
    zones = {}
    for loc in ta.locations:
        kept = []
        for z in store.get(loc, ()):
            z = z.constrain_atom(AUX, "==", 0)
            if not z.empty:
                kept.append(z.free([AUX]))
        if kept:
            zones[loc] = [z for _, z in _prune([(loc, z) for z in kept])]
    return WinningSet(zones, delta)


def verdict(estimate: StateEstimate, W: WinningSet) -> int:
    for loc, z in estimate.states:
        for w in W.zones.get(loc, ()):
            if not (z & w).empty:
                return 1
    return 0


@dataclass(frozen=True)
class PredictionTrace:
    verdicts: tuple  # of (time, 0 | 1)
    bound: int
    rate: Fraction
    error: Optional[str] = None
    warning: Optional[str] = None
    estimates: tuple = field(default=(), compare=False, repr=False)

    @property
    def anticipation(self) -> Fraction:
        return self.bound * self.rate

    def first_alarm(self):
        return next((t for t, v in self.verdicts if v == 1), None)

    def to_jsonl(self) -> str:
        lines = [f'{{"time": "{t}", "verdict": {v}}}' for t, v in self.verdicts]
        if self.error:
            lines.append('{"error": ' + _json_str(self.error) + "}")
        return "\n".join(lines) + ("\n" if lines else "")


def _json_str(s):
    import json

    return json.dumps(s, ensure_ascii=False)


def run_predictor(n, delta: int, rate, trace: TimedWord, verify: bool = False) -> PredictionTrace:
    """Fold `trace` through the estimator, answering at every multiple of
    `rate` and at every event instant.

    The anticipation bound is ``delta · rate`` time units.  With `verify`,
    the model's ``(rate, delta)``-predictability is checked first and a
    warning is attached when it fails.
    """
    n = normalize(n)
    rate = as_fraction(rate)
    if rate <= 0:
        raise ValueError("the sampling rate must be positive")
    warning = None
    if verify:
        spec = None if rate == 1 else SamplingSpec(rate)
        if not check_delta_predictable(n, delta, sampling=spec, witness=False).predictable:
            warning = (
                f"model is not ({rate}, {delta})-predictable; verdicts are best-effort"
            )
    W = precompute_W(n, delta * rate)
    stamps = trace.timestamps()
    end = trace.duration
    instants = sorted(
        {Fraction(0)} | {t for t, _ in stamps} | {k * rate for k in range(int(end // rate) + 1)}
    )
    est = initial_estimate(n)
    verdicts, estimates = [], []
    i = 0
    try:
        for t in instants:
            if t > est.time:
                est = step(n, est, t - est.time)
            while i < len(stamps) and stamps[i][0] == t:
                est = step(n, est, 0, stamps[i][1])
                i += 1
            verdicts.append((t, verdict(est, W)))
            estimates.append(est)
    except InconsistentObservation as exc:
        return PredictionTrace(tuple(verdicts), delta, rate, str(exc), warning, tuple(estimates))
    return PredictionTrace(tuple(verdicts), delta, rate, None, warning, tuple(estimates))
