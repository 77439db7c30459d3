"""Büchi emptiness on explicit graphs by strongly connected components."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass


@dataclass(frozen=True)
class Lasso:
    """``stem`` leads from the initial node to ``cycle[0]``'s source; both are
    lists of ``(src, action, dst)`` triples and the cycle is nonempty."""

    stem: tuple
    cycle: tuple

    @property
    def path(self) -> tuple:
        return self.stem + self.cycle

    def nodes(self) -> list:
        first = self.stem[0][0] if self.stem else self.cycle[0][0]
        return [first] + [dst for _, _, dst in self.path]


def _as_out(succ):
    return succ if callable(succ) else succ.__getitem__


def tarjan_scc(n, succ, sources=(0,), keep=None, stop=None):
    """Strongly connected components reachable from `sources`.

    `succ` is a list or a function giving the ``(w, action)`` pairs leaving
    a node; `keep(action)` filters edges; `n` is unused beyond sizing hints
    so lazily growing graphs work.  Iterative, so deep graphs do not hit the
    recursion limit.  Components come out in reverse topological order;
    when `stop(component)` is true the search ends after that component.
    """
    out = _as_out(succ)
    index = {}
    low = {}
    on_stack = set()
    stack = []
    comps = []
    counter = 0
    for s in sources:
        if s in index:
            continue
        index[s] = low[s] = counter
        counter += 1
        stack.append(s)
        on_stack.add(s)
        work = [(s, iter(out(s)))]
        while work:
            v, it = work[-1]
            advanced = False
            for w, action in it:
                if keep is not None and not keep(action):
                    continue
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(out(w))))
                    advanced = True
                    break
                if w in on_stack and index[w] < low[v]:
                    low[v] = index[w]
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                if low[v] < low[u]:
                    low[u] = low[v]
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                comps.append(comp)
                if stop is not None and stop(comp):
                    return comps
    return comps


def _bfs(out, source, goal, inside=None, keep=None):
    """Shortest path of ``(src, action, dst)`` triples from `source` to a node
    satisfying `goal`, at least one edge long."""
    parent = {}
    queue = deque([source])
    seen = {source}
    while queue:
        v = queue.popleft()
        for w, action in out(v):
            if keep is not None and not keep(action):
                continue
            if inside is not None and w not in inside:
                continue
            if goal(w):
                path = [(v, action, w)]
                while v != source:
                    p, a = parent[v]
                    path.append((p, a, v))
                    v = p
                return path[::-1]
            if w not in seen:
                seen.add(w)
                parent[w] = (v, action)
                queue.append(w)
    return None


def find_accepting_lasso(n, succ, repeated, initial=0, keep=None):
    """A lasso through a node with ``repeated(v)`` true, or None.

    `repeated` is a predicate or a set.  The search stops at the first
    accepting component, so lazily built graphs are only explored as far
    as needed.
    """
    out = _as_out(succ)
    is_rep = repeated if callable(repeated) else repeated.__contains__

    def accepting(comp):
        if not any(is_rep(v) for v in comp):
            return False
        if len(comp) > 1:
            return True
        v = comp[0]
        return any(w == v and (keep is None or keep(a)) for w, a in out(v))

    comps = tarjan_scc(n, out, (initial,), keep, stop=accepting)
    if not comps or not accepting(comps[-1]):
        return None
    comp = comps[-1]
    members = set(comp)
    r = min(v for v in comp if is_rep(v))
    stem = [] if r == initial else _bfs(out, initial, lambda v: v == r, keep=keep)
    cycle = _bfs(out, r, lambda v: v == r, inside=members, keep=keep)
    return Lasso(tuple(stem), tuple(cycle))


def buchi_empty(g, keep=None):
    """``(True, None)`` when no reachable cycle of the region graph `g` visits
    a repeated node, else ``(False, lasso)``."""
    if len(g.nodes) == 0:
        return True, None
    lasso = find_accepting_lasso(len(g.nodes), g.out, g.is_repeated, g.initial, keep)
    return lasso is None, lasso
