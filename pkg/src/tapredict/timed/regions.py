"""Region abstraction of a timed automaton.

A region node is ``(location, ints, parts)``.  ``ints[i]`` is the integer
part of clock ``i``: ``-1`` when the clock is inactive in the location and
``M + 1`` when it exceeds its maximal constant M in that location.  ``parts`` orders the
bounded active clocks by fractional part: ``parts[0]`` holds the clocks
with zero fraction (possibly empty), later entries are classes of equal,
increasing, positive fractions.

Maximal constants are computed per location, and clocks are dropped where
their value can no longer matter; both keep products of several copies of
a model small.
"""

from __future__ import annotations


from .automaton import TimedAutomaton
from .dbm import Zone

DELAY = None  # action of a delay-successor edge


def local_constants(ta: TimedAutomaton) -> dict:
    """Per-location maximal constants, ``{location: {clock: M}}``.

    ``M(l, x)`` is the largest constant x can still be compared with before
    its next reset when the automaton is in l; clocks missing from the map
    are irrelevant in l (inactive).  It is the least solution of
    ``M(l, x) >= c`` for atoms ``x ~ c`` of Inv(l) and of guards leaving l,
    and ``M(l, x) >= M(l', x)`` for edges l -> l' that do not reset x.
    """
    m = {q: dict(ta.inv(q).max_constants()) for q in ta.locations}
    for e in ta.edges:
        for x, c in e.guard.max_constants().items():
            if m[e.src].get(x, -1) < c:
                m[e.src][x] = c
    changed = True
    while changed:
        changed = False
        for e in ta.edges:
            src = m[e.src]
            for x, c in m[e.dst].items():
                if x not in e.resets and src.get(x, -1) < c:
                    src[x] = c
                    changed = True
    return m


def active_clocks(ta: TimedAutomaton) -> dict:
    """Clocks whose value matters in each location."""
    return {q: frozenset(v) for q, v in local_constants(ta).items()}


def _compile(constraint, index):
    return tuple((index[x], op, c) for x, op, c in constraint.atoms)


def _sat(ints, zeros, maxc, atoms):
    for i, op, k in atoms:
        v = ints[i]
        if v > maxc[i]:
            ok = op in (">", ">=")
        elif op == "<":
            ok = v < k
        elif op == ">=":
            ok = v >= k
        elif op == "<=":
            ok = v <= k if i in zeros else v < k
        elif op == ">":
            ok = v > k if i in zeros else v >= k
        else:
            ok = i in zeros and v == k
        if not ok:
            return False
    return True


class RegionGraph:
    """Region graph explored lazily from the initial node.

    Node ids follow discovery order.  ``out(v)`` computes (once) and returns
    the successors of v as ``(w, action)`` pairs, where the action is
    DELAY or the index of a model edge.  ``expand_all()`` materializes the
    whole reachable graph.
    """

    def __init__(self, ta: TimedAutomaton, max_nodes: int = 2_000_000):
        self.ta = ta
        self.max_nodes = max_nodes
        names = ta.clocks
        self._n = len(names)
        index = {x: i for i, x in enumerate(names)}
        locs = ta.locations
        loc_index = {q: i for i, q in enumerate(locs)}
        consts = local_constants(ta)
        # -1 marks a clock that is inactive in the location
        self.maxc = [tuple(consts[q].get(x, -1) for x in names) for q in locs]
        self._inv = [_compile(ta.inv(q), index) for q in locs]
        self._out = [[] for _ in locs]
        for k, e in enumerate(ta.edges):
            self._out[loc_index[e.src]].append(
                (k, _compile(e.guard, index), frozenset(index[x] for x in e.resets),
                 loc_index[e.dst])
            )
        self.nodes = []
        self._succ = []
        self._ids = {}
        rep = {loc_index[q] for q in ta.repeated}
        self._rep_locs = rep
        self.initial = 0
        l0 = loc_index[ta.initial]
        m0 = self.maxc[l0]
        ints = tuple(0 if m0[i] >= 0 else -1 for i in range(self._n))
        zeros = tuple(i for i in range(self._n) if m0[i] >= 0)
        if _sat(ints, set(zeros), m0, self._inv[l0]):
            self._visit((l0, ints, (zeros,)))

    # exploration -----------------------------------------------------------

    def _visit(self, node):
        nid = self._ids.get(node)
        if nid is None:
            nid = len(self.nodes)
            if nid >= self.max_nodes:
                raise RuntimeError(f"region graph exceeds {self.max_nodes} nodes")
            self._ids[node] = nid
            self.nodes.append(node)
            self._succ.append(None)
        return nid

    def _delay(self, loc, ints, parts):
        maxc = self.maxc[loc]
        zeros = parts[0]
        if zeros:
            new = list(ints)
            stay = []
            for i in zeros:
                if ints[i] == maxc[i]:
                    new[i] = maxc[i] + 1
                else:
                    stay.append(i)
            return tuple(new), ((),) + ((tuple(stay),) if stay else ()) + parts[1:]
        if len(parts) > 1:
            last = parts[-1]
            new = list(ints)
            for i in last:
                new[i] += 1
            return tuple(new), (last,) + parts[1:-1]
        return None

    def _jump(self, ints, parts, resets, dst):
        maxc = self.maxc[dst]
        new = list(ints)
        zero_set = set(parts[0])
        for i in range(self._n):
            m = maxc[i]
            if m < 0:
                new[i] = -1
            elif i in resets:
                new[i] = 0
            elif ints[i] > m or (ints[i] == m and i not in zero_set):
                new[i] = m + 1
        zeros = tuple(sorted(i for i in zero_set | resets if new[i] >= 0 and new[i] <= maxc[i]))
        classes = []
        for cls in parts[1:]:
            c = tuple(i for i in cls if i not in resets and 0 <= new[i] <= maxc[i])
            if c:
                classes.append(c)
        return tuple(new), (zeros,) + tuple(classes)

    def out(self, nid) -> list:
        succ = self._succ[nid]
        if succ is not None:
            return succ
        loc, ints, parts = self.nodes[nid]
        zeros = set(parts[0])
        succ = []
        d = self._delay(loc, ints, parts)
        if d is not None:
            dints, dparts = d
            if _sat(dints, set(dparts[0]), self.maxc[loc], self._inv[loc]):
                succ.append((self._visit((loc, dints, dparts)), DELAY))
        for k, guard, resets, dst in self._out[loc]:
            if not _sat(ints, zeros, self.maxc[loc], guard):
                continue
            nints, nparts = self._jump(ints, parts, resets, dst)
            if not _sat(nints, set(nparts[0]), self.maxc[dst], self._inv[dst]):
                continue
            succ.append((self._visit((dst, nints, nparts)), k))
        self._succ[nid] = succ
        return succ

    def expand_all(self) -> "RegionGraph":
        i = 0
        while i < len(self.nodes):
            self.out(i)
            i += 1
        return self

    # queries ---------------------------------------------------------------

    def region_of(self, location, valuation):
        """Node id of the region holding a concrete state, or None when the
        state's region has not been discovered."""
        loc = self.ta.locations.index(location)
        maxc = self.maxc[loc]
        ints, fracs = [], {}
        for i, x in enumerate(self.ta.clocks):
            if maxc[i] < 0:
                ints.append(-1)
                continue
            v = valuation[x]
            n = int(v // 1)
            if n > maxc[i] or (n == maxc[i] and v != n):
                ints.append(maxc[i] + 1)
                continue
            ints.append(n)
            fracs.setdefault(v - n, []).append(i)
        zeros = tuple(fracs.pop(0, ()))
        parts = (zeros,) + tuple(tuple(fracs[f]) for f in sorted(fracs))
        return self._ids.get((loc, tuple(ints), parts))

    def __len__(self):
        return len(self.nodes)

    @property
    def succ(self) -> list:
        self.expand_all()
        return self._succ

    def is_repeated(self, nid) -> bool:
        return self.nodes[nid][0] in self._rep_locs

    @property
    def repeated(self) -> frozenset:
        return frozenset(i for i in range(len(self.nodes)) if self.is_repeated(i))

    def edge_count(self) -> int:
        return sum(len(s) for s in self.succ)

    def location(self, nid) -> str:
        return self.ta.locations[self.nodes[nid][0]]

    def action_label(self, action) -> str:
        return "τ" if action is DELAY else self.ta.edges[action].label

    def describe(self, nid) -> str:
        loc, ints, parts = self.nodes[nid]
        maxc = self.maxc[loc]
        names = self.ta.clocks
        vals = []
        for i, v in enumerate(ints):
            if v < 0:
                continue
            if v > maxc[i]:
                vals.append(f"{names[i]}>{maxc[i]}")
            elif i in parts[0]:
                vals.append(f"{names[i]}={v}")
            else:
                vals.append(f"{names[i]}∈({v},{v + 1})")
        text = ", ".join(vals)
        if len(parts) > 2:
            text += "; frac " + " < ".join(
                "{" + ",".join(names[i] for i in cls) + "}" for cls in parts[1:]
            )
        name = self.ta.locations[loc]
        return f"{name} | {text}" if text else name

    def zone(self, nid, clocks=None) -> Zone:
        """The region as a zone over `clocks` (default: the model clocks);
        inactive and extra clocks stay unconstrained."""
        loc, ints, parts = self.nodes[nid]
        maxc = self.maxc[loc]
        names = self.ta.clocks
        z = Zone.universe(tuple(clocks) if clocks is not None else names)
        idx = z.index
        for i, v in enumerate(ints):
            if v < 0:
                continue
            x = names[i]
            if v > maxc[i]:
                z = z.constrain_atom(x, ">", maxc[i])
            elif i in parts[0]:
                z = z.constrain_atom(x, "==", v)
            else:
                z = z.constrain_atom(x, ">", v).constrain_atom(x, "<", v + 1)
        classes = parts[1:]
        for cls in classes:
            a = cls[0]
            for b in cls[1:]:
                d = ints[a] - ints[b]
                z = z.constrain(idx[names[a]], idx[names[b]], (d, 1))
                z = z.constrain(idx[names[b]], idx[names[a]], (-d, 1))
        for lo, hi in zip(classes, classes[1:]):
            a, b = lo[0], hi[0]
            # frac(a) < frac(b)  <=>  a - b < ints[a] - ints[b]
            z = z.constrain(idx[names[a]], idx[names[b]], (ints[a] - ints[b], 0))
        return z

    def to_dot(self) -> str:
        self.expand_all()
        lines = ["digraph regions {", '  node [shape=box, fontname="monospace"];']
        for n in range(len(self.nodes)):
            shape = ", peripheries=2" if self.is_repeated(n) else ""
            label = self.describe(n).replace('"', '\\"')
            lines.append(f'  n{n} [label="{label}"{shape}];')
        for n, out in enumerate(self._succ):
            for dst, action in out:
                label = self.action_label(action).replace('"', '\\"')
                lines.append(f'  n{n} -> n{dst} [label="{label}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def region_graph(ta: TimedAutomaton, lazy: bool = False, max_nodes: int = 2_000_000) -> RegionGraph:
    """Reachable region graph of `ta` (fully expanded unless `lazy`)."""
    g = RegionGraph(ta, max_nodes)
    return g if lazy else g.expand_all()
