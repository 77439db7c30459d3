"""Finite automata with a partially observable alphabet.

A finite automaton is the clockless special case of a timed automaton: a run
is a sequence of discrete steps and its duration is the number of steps,
silent steps included.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Iterable

EPSILON = "ε"
EPS_NAME = "eps"
INF = float("inf")

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class ModelError(ValueError):
    """Raised on malformed or inconsistent model input."""


@dataclass(frozen=True)
class EventAlphabet:
    observable: frozenset
    unobservable: frozenset
    fault: str

    def __post_init__(self):
        object.__setattr__(self, "observable", frozenset(self.observable))
        object.__setattr__(self, "unobservable", frozenset(self.unobservable))
        both = self.observable & self.unobservable
        if both:
            raise ModelError(f"events both observable and unobservable: {sorted(both)}")
        if self.fault not in self.events:
            raise ModelError(f"fault event {self.fault!r} is not declared")
        for name in self.events:
            if name in (EPSILON, EPS_NAME):
                raise ModelError(f"event name {name!r} is reserved for the silent action")
            if not _IDENT.match(name):
                raise ModelError(f"invalid event name {name!r}")

    @property
    def events(self) -> frozenset:
        return self.observable | self.unobservable

    def is_observable(self, label: str) -> bool:
        return label in self.observable

    def project(self, word: Iterable[str]) -> tuple:
        """Erase every event that is not observable."""
        return tuple(a for a in word if a in self.observable)


@dataclass(frozen=True)
class FaEdge:
    src: str
    label: str
    dst: str
    # index of the edge of the original model this one was derived from
    origin: Hashable = None


@dataclass(frozen=True)
class FiniteAutomaton:
    locations: tuple
    initial: str
    edges: tuple
    alphabet: EventAlphabet
    final: frozenset = None
    repeated: frozenset = None
    # location -> pair of component locations, set by products
    components: dict = field(default=None, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "locations", tuple(dict.fromkeys(self.locations)))
        edges = tuple(e if isinstance(e, FaEdge) else FaEdge(*e) for e in self.edges)
        object.__setattr__(self, "edges", edges)
        locs = set(self.locations)
        final = frozenset(locs if self.final is None else self.final)
        repeated = frozenset(locs if self.repeated is None else self.repeated)
        object.__setattr__(self, "final", final)
        object.__setattr__(self, "repeated", repeated)
        if self.initial not in locs:
            raise ModelError(f"initial location {self.initial!r} is not declared")
        for e in edges:
            if e.src not in locs or e.dst not in locs:
                raise ModelError(f"edge {e.src}->{e.dst} uses an undeclared location")
            if e.label != EPSILON and e.label not in self.alphabet.events:
                raise ModelError(f"edge {e.src}->{e.dst} uses undeclared event {e.label!r}")
        if not final <= locs or not repeated <= locs:
            raise ModelError("final/repeated sets must be subsets of the locations")

    @property
    def fault(self) -> str:
        return self.alphabet.fault

    def out_edges(self) -> dict:
        out = {q: [] for q in self.locations}
        for e in self.edges:
            out[e.src].append(e)
        return out

    def replace(self, **changes) -> "FiniteAutomaton":
        fields_ = dict(
            locations=self.locations,
            initial=self.initial,
            edges=self.edges,
            alphabet=self.alphabet,
            final=self.final,
            repeated=self.repeated,
            components=self.components,
        )
        fields_.update(changes)
        return FiniteAutomaton(**fields_)


@dataclass(frozen=True)
class UntimedWord:
    """Trace of a finite-automaton run: its events and its step count."""

    events: tuple
    duration: int

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        if self.duration < len(self.events):
            raise ValueError("duration cannot be shorter than the number of events")

    @classmethod
    def of_path(cls, path) -> "UntimedWord":
        return cls(tuple(e.label for e in path if e.label != EPSILON), len(path))


def fa_product(a: FiniteAutomaton, b: FiniteAutomaton) -> FiniteAutomaton:
    """Synchronized product, built on the fly from the initial pair.

    Components synchronize on every event and interleave silent moves.  The
    product edge origin is the pair of component edges (None for the
    component that does not move).
    """
    if a.alphabet != b.alphabet:
        raise ModelError("product operands must share one event alphabet")

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
                moves.append((ea.dst, q, EPSILON, (ea, None)))
            else:
                for eb in out_b[q]:
                    if eb.label == ea.label:
                        moves.append((ea.dst, eb.dst, ea.label, (ea, eb)))
        for eb in out_b[q]:
            if eb.label == EPSILON:
                moves.append((p, eb.dst, EPSILON, (None, eb)))
        for p2, q2, label, origin in moves:
            if (p2, q2) not in seen:
                seen[(p2, q2)] = name(p2, q2)
                queue.append((p2, q2))
            edges.append(FaEdge(src, label, seen[(p2, q2)], origin))

    components = {v: k for k, v in seen.items()}
    locations = tuple(seen.values())
    final = [n for n, (p, q) in components.items() if p in a.final and q in b.final]
    repeated = [n for n, (p, q) in components.items() if p in a.repeated and q in b.repeated]
    return FiniteAutomaton(
        locations, name(*start), tuple(edges), a.alphabet, final, repeated, components
    )


def hide_unobservable(a: FiniteAutomaton) -> FiniteAutomaton:
    obs = a.alphabet.observable
    edges = tuple(
        e if e.label in obs or e.label == EPSILON else FaEdge(e.src, EPSILON, e.dst, e.origin)
        for e in a.edges
    )
    return a.replace(edges=edges)


def fault_enabled_states(a: FiniteAutomaton) -> set:
    return {e.src for e in a.edges if e.label == a.fault}


def reachable(a: FiniteAutomaton, sources=None, edge_filter=None) -> set:
    """Locations reachable from `sources` (default: the initial location)."""
    if sources is None:
        sources = [a.initial]
    out = a.out_edges()
    seen = set(sources)
    stack = list(sources)
    while stack:
        q = stack.pop()
        for e in out[q]:
            if (edge_filter is None or edge_filter(e)) and e.dst not in seen:
                seen.add(e.dst)
                stack.append(e.dst)
    return seen


def backward_distance_df(a: FiniteAutomaton) -> dict:
    """Shortest number of fault-free steps from each location to a location
    where the fault is enabled (``INF`` when there is none)."""
    preds = {q: [] for q in a.locations}
    for e in a.edges:
        if e.label != a.fault:
            preds[e.dst].append(e.src)
    dist = {q: INF for q in a.locations}
    queue = deque()
    for q in a.locations:
        if q in fault_enabled_states(a):
            dist[q] = 0
            queue.append(q)
    while queue:
        q = queue.popleft()
        for p in preds[q]:
            if dist[p] == INF:
                dist[p] = dist[q] + 1
                queue.append(p)
    return dist


def kappa(a: FiniteAutomaton):
    """Minimum number of steps from the initial location to a fault-enabled one."""
    return backward_distance_df(a)[a.initial]


def bfs_path(a: FiniteAutomaton, source: str, goal, edge_filter=None):
    """Shortest edge path from `source` to the first location satisfying `goal`.

    Edges are explored in declaration order so the result is deterministic.
    Returns None when no such location is reachable.
    """
    out = a.out_edges()
    parent = {source: None}
    queue = deque([source])
    while queue:
        q = queue.popleft()
        if goal(q):
            path = []
            while parent[q] is not None:
                e = parent[q]
                path.append(e)
                q = e.src
            return path[::-1]
        for e in out[q]:
            if (edge_filter is None or edge_filter(e)) and e.dst not in parent:
                parent[e.dst] = e
                queue.append(e.dst)
    return None
