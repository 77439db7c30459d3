"""Bounded predictability of finite automata via the twin-plant product."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

from .automata import (
    INF,
    FaEdge,
    FiniteAutomaton,
    ModelError,
    UntimedWord,
    backward_distance_df,
    bfs_path,
    fa_product,
    hide_unobservable,
    reachable,
)

NOT_PREDICTABLE = "not-predictable"


@dataclass(frozen=True)
class FaWitness:
    """A pair of runs with the same observation.

    ``prefaulty_path`` is a fault-free run ending within ``k`` steps of the
    fault; ``stem_path`` followed by ``cycle_path`` repeated forever is an
    infinite fault-free run.  The first ``split`` edges of the stem observe
    the same events as the prefaulty run.
    """

    prefaulty: UntimedWord
    stem: UntimedWord
    cycle: UntimedWord
    prefaulty_path: tuple
    stem_path: tuple
    cycle_path: tuple
    split: int

    def to_json(self) -> dict:
        def path(p):
            return [[e.src, e.label, e.dst] for e in p]

        return {
            "prefaulty_word": {"events": list(self.prefaulty.events), "duration": self.prefaulty.duration},
            "nonfaulty_lasso": {
                "stem": {"events": list(self.stem.events), "duration": self.stem.duration},
                "cycle": {"events": list(self.cycle.events), "duration": self.cycle.duration},
            },
            "prefaulty_path": path(self.prefaulty_path),
            "stem_path": path(self.stem_path),
            "cycle_path": path(self.cycle_path),
            "split": self.split,
        }


@dataclass(frozen=True)
class FaVerdict:
    predictable: bool
    k: int
    witness: Optional[FaWitness] = None

    def to_json(self) -> dict:
        return {
            "predictable": self.predictable,
            "bound": self.k,
            "witness": None if self.witness is None else self.witness.to_json(),
        }


def _not_fault(a):
    return lambda e: e.label != a.fault


def compute_Fk(a: FiniteAutomaton, k: int) -> set:
    if k < 0:
        raise ModelError("the bound must be non-negative")
    dist = backward_distance_df(a)
    return {q for q in a.locations if dist[q] <= k}


def compute_F_not_f(a: FiniteAutomaton) -> set:
    """Locations, reachable without the fault, that start an infinite
    fault-free path.

    Greatest fixpoint: start from the fault-free reachable locations and
    repeatedly drop those with no fault-free successor left in the set.
    """
    keep = reachable(a, edge_filter=_not_fault(a))
    succ = {q: set() for q in keep}
    pred = {q: set() for q in keep}
    for e in a.edges:
        if e.label != a.fault and e.src in keep and e.dst in keep:
            succ[e.src].add(e.dst)
            pred[e.dst].add(e.src)
    dead = deque(q for q in keep if not succ[q])
    while dead:
        q = dead.popleft()
        if q not in keep:
            continue
        keep.discard(q)
        for p in pred[q]:
            if p in keep:
                succ[p].discard(q)
                if not succ[p]:
                    dead.append(p)
    return keep


def build_twin_fa(a: FiniteAutomaton, k: int):
    """Return (A1(k), A2).

    A1(k) accepts the observations of fault-free runs ending within ``k``
    steps of the fault; A2 accepts the observations of prefixes of infinite
    fault-free runs.  Both hide unobservable events, and A1 keeps only the
    locations from which the fault can still be enabled.  When the initial
    location starts no infinite fault-free run, A2 keeps only its initial
    location and has no accepting state.
    """
    fk = compute_Fk(a, k)
    keep = compute_F_not_f(a)
    copy = [FaEdge(e.src, e.label, e.dst, e) for e in a.edges if e.label != a.fault]
    # A1 is trimmed to locations that can still reach the fault
    dist = backward_distance_df(a)
    live = {q for q in a.locations if dist[q] != INF} | {a.initial}
    a1 = hide_unobservable(a.replace(
        locations=tuple(q for q in a.locations if q in live),
        edges=tuple(e for e in copy if e.src in live and e.dst in live),
        final=fk & live, repeated=None, components=None,
    ))
    if a.initial in keep:
        locs = tuple(q for q in a.locations if q in keep)
        edges = tuple(e for e in copy if e.src in keep and e.dst in keep)
        a2 = hide_unobservable(
            FiniteAutomaton(locs, a.initial, edges, a.alphabet, final=None, repeated=None)
        )
    else:
        a2 = FiniteAutomaton((a.initial,), a.initial, (), a.alphabet, final=(), repeated=())
    return a1, a2


def _component_path(path, side):
    """Edges of the original automaton taken by one side of a product path."""
    run = []
    for e in path:
        comp = e.origin[side]
        if comp is not None:
            run.append(comp.origin)
    return run


def _lasso_from(a2: FiniteAutomaton, start: str):
    """Shortest path from `start` to a location on a cycle, and that cycle."""
    out = a2.out_edges()
    order = []
    seen = {start}
    queue = deque([start])
    while queue:
        q = queue.popleft()
        order.append(q)
        for e in out[q]:
            if e.dst not in seen:
                seen.add(e.dst)
                queue.append(e.dst)
    for r in order:
        for e in out[r]:
            back = bfs_path(a2, e.dst, lambda q, r=r: q == r)
            if back is not None:
                return bfs_path(a2, start, lambda q, r=r: q == r), [e] + back
    return None


def check_k_predictable(a: FiniteAutomaton, k: int) -> FaVerdict:
    if k < 0:
        raise ModelError("the bound must be non-negative")
    if backward_distance_df(a)[a.initial] == INF:
        return FaVerdict(True, k)
    a1, a2 = build_twin_fa(a, k)
    prod = fa_product(a1, a2)
    path = bfs_path(prod, prod.initial, lambda q: q in prod.final)
    if path is None:
        return FaVerdict(True, k)
    return FaVerdict(False, k, _witness(prod, a2, path))


def _witness(prod, a2, path) -> FaWitness:
    end = prod.components[path[-1].dst if path else prod.initial][1]
    pre = _component_path(path, 0)
    run2 = _component_path(path, 1)
    tail, cycle = _lasso_from(a2, end)
    stem = run2 + [e.origin for e in tail]
    cyc = [e.origin for e in cycle]
    return FaWitness(
        UntimedWord.of_path(pre),
        UntimedWord.of_path(stem),
        UntimedWord.of_path(cyc),
        tuple(pre),
        tuple(stem),
        tuple(cyc),
        len(run2),
    )


def max_k(a: FiniteAutomaton):
    """Largest k for which `a` is k-predictable.

    Returns ``INF`` when the fault is never enabled and ``NOT_PREDICTABLE``
    when `a` is not even 0-predictable.  When no prefix of an infinite
    fault-free run is confusable, every k is predictable and the answer is
    capped at κ, the fewest steps to a fault-enabled location.
    """
    dist = backward_distance_df(a)
    kap = dist[a.initial]
    if kap == INF:
        return INF
    a1, a2 = build_twin_fa(a, 0)
    prod = fa_product(a1, a2)
    live = [p for p, q in map(prod.components.get, prod.locations) if q in a2.final]
    if not live:
        return kap
    m = min(dist[p] for p in live)
    if m == 0:
        return NOT_PREDICTABLE
    return m - 1


def predictable_fa(a: FiniteAutomaton) -> bool:
    return check_k_predictable(a, 0).predictable
