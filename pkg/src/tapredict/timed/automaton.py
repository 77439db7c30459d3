"""Timed automata, timed words and the synchronized product."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Hashable

from ..automata import EPSILON, EventAlphabet, FaEdge, FiniteAutomaton, ModelError
from .constraints import TRUE, ClockConstraint, as_fraction


@dataclass(frozen=True)
class TaEdge:
    src: str
    guard: ClockConstraint
    label: str
    resets: frozenset
    dst: str
    origin: Hashable = None

    def __post_init__(self):
        object.__setattr__(self, "resets", frozenset(self.resets))


@dataclass(frozen=True)
class TimedAutomaton:
    locations: tuple
    initial: str
    clocks: tuple
    alphabet: EventAlphabet
    edges: tuple
    invariants: dict = field(default_factory=dict, compare=False, hash=False)
    final: frozenset = None
    repeated: frozenset = None
    components: dict = field(default=None, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "locations", tuple(dict.fromkeys(self.locations)))
        object.__setattr__(self, "clocks", tuple(dict.fromkeys(self.clocks)))
        object.__setattr__(self, "edges", tuple(self.edges))
        locs = set(self.locations)
        clocks = set(self.clocks)
        final = frozenset(locs if self.final is None else self.final)
        repeated = frozenset(locs if self.repeated is None else self.repeated)
        object.__setattr__(self, "final", final)
        object.__setattr__(self, "repeated", repeated)
        invs = {q: self.invariants.get(q, TRUE) for q in self.locations}
        unknown = set(self.invariants) - locs
        if unknown:
            raise ModelError(f"invariants given for undeclared locations {sorted(unknown)}")
        object.__setattr__(self, "invariants", invs)
        if self.initial not in locs:
            raise ModelError(f"initial location {self.initial!r} is not declared")
        for q, inv in invs.items():
            if not inv.is_upper_bound():
                raise ModelError(f"invariant of {q!r} must only use < and <= ({inv})")
            if not inv.clocks() <= clocks:
                raise ModelError(f"invariant of {q!r} uses undeclared clocks")
        for e in self.edges:
            where = f"edge {e.src}->{e.dst}"
            if e.src not in locs or e.dst not in locs:
                raise ModelError(f"{where} uses an undeclared location")
            if e.label != EPSILON and e.label not in self.alphabet.events:
                raise ModelError(f"{where} uses undeclared event {e.label!r}")
            if not (e.guard.clocks() | e.resets) <= clocks:
                raise ModelError(f"{where} uses undeclared clocks")
        if not final <= locs or not repeated <= locs:
            raise ModelError("final/repeated sets must be subsets of the locations")

    @property
    def fault(self) -> str:
        return self.alphabet.fault

    def inv(self, q) -> ClockConstraint:
        return self.invariants[q]

    def out_edges(self) -> dict:
        out = {q: [] for q in self.locations}
        for e in self.edges:
            out[e.src].append(e)
        return out

    def fault_edges(self):
        return [e for e in self.edges if e.label == self.fault]

    def replace(self, **changes) -> "TimedAutomaton":
        fields_ = dict(
            locations=self.locations,
            initial=self.initial,
            clocks=self.clocks,
            alphabet=self.alphabet,
            edges=self.edges,
            invariants=self.invariants,
            final=self.final,
            repeated=self.repeated,
            components=self.components,
        )
        fields_.update(changes)
        return TimedAutomaton(**fields_)

    def max_constants(self) -> dict:
        """Largest constant each clock is compared with (0 if never)."""
        out = {x: 0 for x in self.clocks}
        constraints = [e.guard for e in self.edges] + list(self.invariants.values())
        for g in constraints:
            for x, c in g.max_constants().items():
                out[x] = max(out[x], c)
        return out

    def unbounded_locations(self) -> list:
        """Locations whose invariant puts no upper bound on any clock."""
        return [q for q in self.locations if not self.invariants[q].bounds_above()]

    def scaled(self, factor: int) -> "TimedAutomaton":
        """Multiply every constant by `factor` (one time unit becomes `factor`)."""
        edges = tuple(
            TaEdge(e.src, e.guard.scaled(factor), e.label, e.resets, e.dst, e.origin)
            for e in self.edges
        )
        invs = {q: g.scaled(factor) for q, g in self.invariants.items()}
        return self.replace(edges=edges, invariants=invs)

    def untimed(self) -> FiniteAutomaton:
        edges = tuple(FaEdge(e.src, e.label, e.dst) for e in self.edges)
        return FiniteAutomaton(
            self.locations, self.initial, edges, self.alphabet, self.final, self.repeated
        )


@dataclass(frozen=True)
class TimedWord:
    """``d0 a1 d1 a2 ... an dn``: `delays` has one more entry than `events`."""

    delays: tuple
    events: tuple

    def __post_init__(self):
        delays = tuple(as_fraction(d) for d in self.delays)
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "events", tuple(self.events))
        if len(delays) != len(self.events) + 1:
            raise ValueError("a timed word needs one more delay than events")
        if any(d < 0 for d in delays):
            raise ValueError("delays must be non-negative")

    @classmethod
    def parse(cls, text: str) -> "TimedWord":
        """Read ``"0.4 a 1 b 2.7 c"``; delays between events default to 0."""
        delays, events = [Fraction(0)], []
        for tok in text.split():
            try:
                value = Fraction(tok)
            except ValueError:
                events.append(tok)
                delays.append(Fraction(0))
            else:
                delays[-1] += value
        return cls(tuple(delays), tuple(events))

    @classmethod
    def from_timestamps(cls, stamps, end=None) -> "TimedWord":
        """Build from ``[(time, event), ...]`` with non-decreasing times."""
        delays, events, now = [], [], Fraction(0)
        for t, a in stamps:
            t = as_fraction(t)
            delays.append(t - now)
            events.append(a)
            now = t
        end = now if end is None else as_fraction(end)
        delays.append(end - now)
        return cls(tuple(delays), tuple(events))

    @property
    def duration(self) -> Fraction:
        return sum(self.delays, Fraction(0))

    def timestamps(self) -> list:
        out, now = [], Fraction(0)
        for d, a in zip(self.delays, self.events):
            now += d
            out.append((now, a))
        return out

    def project(self, keep) -> "TimedWord":
        """Erase events outside `keep`, preserving elapsed time."""
        stamps = [(t, a) for t, a in self.timestamps() if a in keep]
        return TimedWord.from_timestamps(stamps, end=self.duration)

    def untimed(self) -> tuple:
        return self.events

    def denominators_lcm(self) -> int:
        out = 1
        for d in self.delays:
            out = lcm(out, d.denominator)
        return out

    def __str__(self):
        parts = [str(self.delays[0])]
        for a, d in zip(self.events, self.delays[1:]):
            parts += [a, str(d)]
        return " ".join(parts)


def ta_product(a: TimedAutomaton, b: TimedAutomaton) -> TimedAutomaton:
    """Synchronized product of two timed automata (reachable locations only).

    The repeated set is exact when one operand repeats every location, which
    is the only case the predictability construction needs; any other
    combination would require a generalized Büchi product and is refused.
    """
    common = set(a.clocks) & set(b.clocks)
    if common:
        raise ModelError(f"product operands share clocks {sorted(common)}")
    if a.alphabet != b.alphabet:
        raise ModelError("product operands must share one event alphabet")
    if b.repeated == frozenset(b.locations):
        rep_ok = lambda p, q: p in a.repeated  # noqa: E731
    elif a.repeated == frozenset(a.locations):
        rep_ok = lambda p, q: q in b.repeated  # noqa: E731
    else:
        raise NotImplementedError("Büchi product needs one operand repeating every location")

    def name(p, q):
        return f"({p},{q})"

    out_a, out_b = a.out_edges(), b.out_edges()
    start = (a.initial, b.initial)
    seen = {start: name(*start)}
    queue = deque([start])
    edges = []
    while queue:
        p, q = queue.popleft()
        src = seen[(p, q)]
        moves = []
        for ea in out_a[p]:
            if ea.label == EPSILON:
                moves.append((ea.dst, q, ea.guard, EPSILON, ea.resets, (ea, None)))
            else:
                for eb in out_b[q]:
                    if eb.label == ea.label:
                        moves.append(
                            (ea.dst, eb.dst, ea.guard & eb.guard, ea.label,
                             ea.resets | eb.resets, (ea, eb))
                        )
        for eb in out_b[q]:
            if eb.label == EPSILON:
                moves.append((p, eb.dst, eb.guard, EPSILON, eb.resets, (None, eb)))
        for p2, q2, guard, label, resets, origin in moves:
            if (p2, q2) not in seen:
                seen[(p2, q2)] = name(p2, q2)
                queue.append((p2, q2))
            edges.append(TaEdge(src, guard, label, resets, seen[(p2, q2)], origin))

    components = {v: k for k, v in seen.items()}
    invs = {n: a.inv(p) & b.inv(q) for n, (p, q) in components.items()}
    final = [n for n, (p, q) in components.items() if p in a.final and q in b.final]
    repeated = [n for n, (p, q) in components.items() if rep_ok(p, q)]
    return TimedAutomaton(
        tuple(seen.values()),
        name(*start),
        a.clocks + b.clocks,
        a.alphabet,
        tuple(edges),
        invs,
        final,
        repeated,
        components,
    )
