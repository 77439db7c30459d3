"""Bounded predictability of timed automata.

The decision procedure builds a twin plant: ``A1(Δ)`` runs the model, may
switch once to a silent twin copy, and accepts when the copy reaches an
enabled fault within Δ time units; ``A2`` runs the fault-free model.  The
model is Δ-predictable iff the product has no accepting (Büchi) run, which
is decided on its region graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .automata import EPSILON, INF, EventAlphabet, ModelError
from .fa_predict import NOT_PREDICTABLE
from .timed.automaton import TaEdge, TimedAutomaton, TimedWord, ta_product
from .timed.buchi import Lasso, buchi_empty
from .timed.constraints import TRUE, atom, as_fraction
from .timed.dbm import Zone
from .timed.reach import fault_reachable, min_time_bound
from .timed.regions import DELAY, RegionGraph, region_graph
from .timed.runs import RunStep, replay, run_trace

FAULT_SINK = "l_f"
FAULT_CLOCK = "x_f"
END = "END"
NZ = "NZ"
END_PRIME = "END'"
TWIN = "~"
Y = "y"
S = "s"
RESERVED_LOCATIONS = (FAULT_SINK, END, NZ)
RESERVED_CLOCKS = (FAULT_CLOCK, Y, S)


def check_reserved(ta: TimedAutomaton, allow_sink=False):
    """Raise ModelError if `ta` uses a name the constructions rely on."""
    for q in ta.locations:
        if q.startswith(TWIN) or (q in RESERVED_LOCATIONS and not (allow_sink and q == FAULT_SINK)):
            raise ModelError(f"location name {q!r} is reserved")
    for x in ta.clocks:
        if x.endswith("'") or (x in RESERVED_CLOCKS and not (allow_sink and x == FAULT_CLOCK)):
            raise ModelError(f"clock name {x!r} is reserved")


# --------------------------------------------------------------------------
# normalization


@dataclass(frozen=True)
class NormalizedTA:
    """A model whose f-edges all enter the sink ``l_f`` and reset ``x_f``.

    ``fault_sink`` is None when the model has no f-edge at all.
    """

    ta: TimedAutomaton
    fault_sink: Optional[str] = FAULT_SINK
    fault_clock: Optional[str] = FAULT_CLOCK

    @property
    def fault(self):
        return self.ta.fault

    def scaled(self, factor: int) -> "NormalizedTA":
        return NormalizedTA(self.ta.scaled(factor), self.fault_sink, self.fault_clock)

    def plain_locations(self) -> tuple:
        return tuple(q for q in self.ta.locations if q != self.fault_sink)

    def plain_clocks(self) -> tuple:
        return tuple(x for x in self.ta.clocks if x != self.fault_clock)


def _is_normal_form(ta: TimedAutomaton) -> bool:
    if FAULT_SINK not in ta.locations or FAULT_CLOCK not in ta.clocks:
        return False
    if ta.inv(FAULT_SINK) != atom(FAULT_CLOCK, "<=", 1):
        return False
    for q in ta.locations:
        if q != FAULT_SINK and FAULT_CLOCK in ta.inv(q).clocks():
            return False
    for e in ta.edges:
        if e.label == ta.fault:
            if e.dst != FAULT_SINK or FAULT_CLOCK not in e.resets or FAULT_CLOCK in e.guard.clocks():
                return False
        elif e.src == FAULT_SINK:
            if e.dst != FAULT_SINK:
                return False
        elif FAULT_CLOCK in e.guard.clocks() | e.resets or e.dst == FAULT_SINK:
            return False
    return True


def normalize(a) -> NormalizedTA:
    """Redirect f-edges to a fresh sink ``l_f`` with a dedicated clock.

    Locations that become unreachable in the untimed graph are dropped.

    The sink loops on every observable event (resetting ``x_f``, with
    ``Inv(l_f) = x_f <= 1``) so faulty runs stay time-divergent.  Already
    normalized input is returned unchanged.
    """
    if isinstance(a, NormalizedTA):
        return a
    if _is_normal_form(a):
        check_reserved(a, allow_sink=True)
        return NormalizedTA(a)
    check_reserved(a)
    f = a.fault
    if not any(e.label == f for e in a.edges):
        return NormalizedTA(a, None, None)
    edges = [
        TaEdge(e.src, e.guard, f, e.resets | {FAULT_CLOCK}, FAULT_SINK, e.origin)
        if e.label == f else e
        for e in a.edges
    ]
    for ev in sorted(a.alphabet.observable - {f}):
        edges.append(TaEdge(FAULT_SINK, TRUE, ev, {FAULT_CLOCK}, FAULT_SINK))
    # old fault targets are often left unreachable; drop what no edge reaches
    live = {a.initial}
    stack = [a.initial]
    while stack:
        q = stack.pop()
        for e in edges:
            if e.src == q and e.dst not in live:
                live.add(e.dst)
                stack.append(e.dst)
    locations = tuple(q for q in a.locations if q in live) + (FAULT_SINK,)
    invs = {q: g for q, g in a.invariants.items() if q in live}
    invs[FAULT_SINK] = atom(FAULT_CLOCK, "<=", 1)
    ta = a.replace(
        locations=locations,
        clocks=a.clocks + (FAULT_CLOCK,),
        edges=tuple(e for e in edges if e.src in live or e.src == FAULT_SINK),
        invariants=invs,
        final=None,
        repeated=None,
        components=None,
    )
    return NormalizedTA(ta)


# --------------------------------------------------------------------------
# sampling


@dataclass(frozen=True)
class SamplingSpec:
    """Observation every ``α = q/p`` time units; models are scaled by p."""

    rate: Fraction

    def __post_init__(self):
        rate = as_fraction(self.rate)
        if rate <= 0:
            raise ModelError("the sampling rate must be positive")
        object.__setattr__(self, "rate", rate)

    @classmethod
    def parse(cls, text: str) -> "SamplingSpec":
        try:
            return cls(Fraction(text.strip()))
        except (ValueError, ZeroDivisionError) as exc:
            raise ModelError(f"invalid sampling rate {text!r}; expected q/p") from exc

    @property
    def scale(self) -> int:
        return self.rate.denominator

    @property
    def period(self) -> int:
        return self.rate.numerator

    def anticipation(self, d) -> Fraction:
        """Time units covered by a bound of `d` sampling periods."""
        return d * self.rate

    def __str__(self):
        return f"{self.period}/{self.scale}"


def apply_sampling(a: TimedAutomaton, rate):
    """Return ``(scaled model, spec, sampler)`` for sampling rate `rate`.

    The sampler has one location, clock ``s`` with invariant ``s <= q`` and
    an ε-loop resetting ``s`` when ``s == q``.  It also loops on every event
    so that it is neutral in a synchronized product.
    """
    spec = rate if isinstance(rate, SamplingSpec) else SamplingSpec(as_fraction(rate))
    scaled = a.scaled(spec.scale)
    q = spec.period
    edges = [TaEdge("sampler", atom(S, "==", q), EPSILON, {S}, "sampler")]
    edges += [TaEdge("sampler", TRUE, ev, (), "sampler") for ev in sorted(a.alphabet.events)]
    sampler = TimedAutomaton(
        ("sampler",), "sampler", (S,), a.alphabet, tuple(edges), {"sampler": atom(S, "<=", q)}
    )
    return scaled, spec, sampler


# --------------------------------------------------------------------------
# twin plant


def _hide(label, alphabet: EventAlphabet):
    return label if label in alphabet.observable else EPSILON


def build_twin_A1(n: NormalizedTA, delta: int, divergence: bool = True,
                  sampling: Optional[SamplingSpec] = None) -> TimedAutomaton:
    """The prefault detector ``A1(Δ)``.

    With `sampling`, `n` must already be scaled: the bound on the END edge
    becomes ``Δ·q`` and the switch to the twin copy requires ``s == 0``.
    Edge origins record the construction step each edge comes from.
    """
    if delta < 0:
        raise ModelError("the bound must be non-negative")
    ta = n.ta
    f = ta.fault
    alpha = ta.alphabet
    locs = n.plain_locations()
    clocks = n.plain_clocks() + (Y,)
    obs = sorted(alpha.observable - {f})
    horizon = delta * (sampling.period if sampling else 1)

    def tw(q):
        return TWIN + q

    edges = []
    invs = {}
    for q in locs:
        invs[q] = ta.inv(q)
        invs[tw(q)] = ta.inv(q)
    plain = [e for e in ta.edges if e.label != f and e.src != n.fault_sink]
    for e in plain:
        edges.append(TaEdge(e.src, e.guard, _hide(e.label, alpha), e.resets, e.dst, ("orig", e)))
    switch_guard = atom(S, "==", 0) if sampling else TRUE
    for q in locs:
        edges.append(TaEdge(q, switch_guard, EPSILON, {Y}, tw(q), ("switch", q)))
    for e in plain:
        edges.append(TaEdge(tw(e.src), e.guard, EPSILON, e.resets, tw(e.dst), ("twin", e)))
    for e in ta.edges:
        if e.label == f:
            g = e.guard & atom(Y, "<=", horizon)
            edges.append(TaEdge(tw(e.src), g, EPSILON, {Y}, END, ("fault", e)))
    sinks = [END, NZ] if divergence else [END]
    for q in [tw(q) for q in locs] + sinks:
        for ev in obs:
            edges.append(TaEdge(q, TRUE, ev, (), q, ("loop", ev)))
    if divergence:
        invs[END] = atom(Y, "<=", 1)
        invs[NZ] = atom(Y, "<=", 0)
        edges.append(TaEdge(END, atom(Y, "==", 1), EPSILON, {Y}, NZ, ("gadget",)))
        edges.append(TaEdge(NZ, TRUE, EPSILON, (), END, ("gadget",)))
    all_locs = locs + tuple(tw(q) for q in locs) + tuple(sinks)
    if sampling:
        clocks = clocks + (S,)
        bound = atom(S, "<=", sampling.period)
        invs = {q: invs.get(q, TRUE) & bound for q in all_locs}
        for q in all_locs:
            edges.append(TaEdge(q, atom(S, "==", sampling.period), EPSILON, {S}, q, ("tick",)))
    return TimedAutomaton(
        all_locs, ta.initial, clocks, alpha, tuple(edges), invs,
        final=(), repeated=(NZ,) if divergence else (END,),
    )


def build_A2(n: NormalizedTA) -> TimedAutomaton:
    """Fault-free copy with primed clocks and hidden unobservable events."""
    ta = n.ta
    f = ta.fault
    rename = {x: x + "'" for x in n.plain_clocks()}
    locs = n.plain_locations()
    edges = tuple(
        TaEdge(e.src, e.guard.renamed(rename), _hide(e.label, ta.alphabet),
               frozenset(rename[x] for x in e.resets if x in rename), e.dst, e)
        for e in ta.edges
        if e.label != f and e.src != n.fault_sink and e.dst != n.fault_sink
    )
    invs = {q: ta.inv(q).renamed(rename) for q in locs}
    return TimedAutomaton(
        locs, ta.initial, tuple(rename.values()), ta.alphabet, edges, invs
    )


def twin_plant(n: NormalizedTA, delta: int, divergence=True, sampling=None) -> TimedAutomaton:
    """A1(Δ) × A2 of the normalized model `n` (already scaled when sampled)."""
    return ta_product(build_twin_A1(n, delta, divergence, sampling), build_A2(n))


def model_twin_plant(a, delta: int, divergence=True, sampling=None):
    """Twin plant of any model: normalizes and scales as the checker does.

    Returns None when the fault is never enabled.
    """
    n = normalize(a)
    if sampling is not None:
        n = n.scaled(sampling.scale)
    if n.fault_sink is None:
        return None
    return twin_plant(n, delta, divergence, sampling)


# --------------------------------------------------------------------------
# verdicts and witnesses


@dataclass(frozen=True)
class TaWitness:
    """A confusable pair of runs, in the (scaled) normalized model.

    ``prefix_steps`` is the fault-free run up to the switch at
    ``switch_time``; ``twin_steps`` continues it to the firing of an f-edge
    at ``fault_time``.  ``nonfaulty_steps`` is a fault-free run whose steps
    from ``cycle_start`` on repeat forever in the region graph; its first
    ``split`` steps observe the same timed word as the prefix.  Times are
    in model units; divide by ``scale`` for the original time unit.
    """

    prefaulty: TimedWord
    switch_time: Fraction
    fault_time: Fraction
    concretized_prefix: TimedWord
    lasso: Lasso
    lasso_nodes: tuple
    prefix_steps: tuple
    twin_steps: tuple
    nonfaulty_steps: tuple
    split: int
    cycle_start: int
    scale: int = 1

    @property
    def horizon(self) -> Fraction:
        return self.fault_time - self.switch_time

    def to_json(self) -> dict:
        p = self.scale

        def t(x):
            return str(Fraction(x) / p)

        def word(w):
            return [[t(ts), a] for ts, a in w.timestamps()] + [["end", t(w.duration)]]

        def steps(run):
            now, out = Fraction(0), []
            for st in run:
                now += st.delay
                if st.edge is not None:
                    out.append([t(now), st.edge.src, st.edge.label, st.edge.dst])
            return out

        return {
            "prefaulty_word": word(self.prefaulty),
            "observed_prefix": word(self.concretized_prefix),
            "switch_time": t(self.switch_time),
            "fault_time": t(self.fault_time),
            "horizon": t(self.horizon),
            "prefix_run": steps(self.prefix_steps),
            "twin_run": steps(self.twin_steps),
            "nonfaulty_run": steps(self.nonfaulty_steps),
            "split": self.split,
            "cycle_start": self.cycle_start,
            "lasso": {
                "stem": len(self.lasso.stem),
                "cycle": len(self.lasso.cycle),
                "regions": list(self.lasso_nodes),
            },
        }


@dataclass(frozen=True)
class TaVerdict:
    predictable: bool
    delta: int
    witness: Optional[TaWitness] = None
    sampling: Optional[SamplingSpec] = None
    divergence: bool = True
    regions: int = 0
    stats: dict = field(default_factory=dict, compare=False)

    @property
    def anticipation(self) -> Fraction:
        return self.sampling.anticipation(self.delta) if self.sampling else Fraction(self.delta)

    def to_json(self) -> dict:
        return {
            "predictable": self.predictable,
            "bound": self.delta,
            "sampling": None if self.sampling is None else str(self.sampling),
            "anticipation": str(self.anticipation),
            "divergence": self.divergence,
            "regions": self.regions,
            "witness": None if self.witness is None else self.witness.to_json(),
        }


def _concrete_path(g: RegionGraph, lasso: Lasso):
    """Timed steps ``[(time, product edge or None)]`` realizing the lasso path.

    Forward zones along the path carry a never-reset global clock; a point
    is then chosen backwards so every delay and guard is met exactly.
    """
    ta = g.ta
    gclk = "T"
    while gclk in ta.clocks:
        gclk += "_"
    clocks = ta.clocks + (gclk,)
    path = list(lasso.path)
    nodes = lasso.nodes()
    zones = [Zone.zero(clocks) & g.zone(nodes[0], clocks)]
    for src, action, dst in path:
        z = zones[-1]
        loc = ta.locations[g.nodes[dst][0]]
        if action is DELAY:
            z = z.up()
        else:
            e = ta.edges[action]
            z = (z & e.guard).reset(e.resets)
        z = z & g.zone(dst, clocks) & ta.inv(loc)
        if z.empty:
            raise RuntimeError("region path is not realizable; region graph is inconsistent")
        zones.append(z)
    points = [zones[-1].pick()]
    for i in range(len(path) - 1, -1, -1):
        _, action, _ = path[i]
        nxt = Zone.point(clocks, points[0])
        if action is DELAY:
            z = zones[i] & nxt.down()
        else:
            e = ta.edges[action]
            z = zones[i] & e.guard & nxt.free(e.resets)
        if z.empty:
            raise RuntimeError("could not concretize the region path")
        points.insert(0, z.pick())
    timed = []
    for i, (_, action, _) in enumerate(path):
        if action is not DELAY:
            timed.append((points[i][gclk], ta.edges[action]))
    return timed, points[-1][gclk], points[len(lasso.stem)][gclk]


def _steps(stamped, end=None):
    out, now = [], Fraction(0)
    for t, e in stamped:
        out.append(RunStep(t - now, e))
        now = t
    if end is not None and end > now:
        out.append(RunStep(end - now, None))
    return tuple(out)


def _witness(n: NormalizedTA, g: RegionGraph, lasso: Lasso, scale: int) -> TaWitness:
    timed, _, cycle_time = _concrete_path(g, lasso)
    prefix, twin, a2 = [], [], []
    switch_time = fault_time = None
    split = None
    cycle_start = None
    n_stem_edges = sum(1 for _, a, _ in lasso.stem if a is not DELAY)
    for k, (t, pe) in enumerate(timed):
        ea, eb = pe.origin
        if k == n_stem_edges and cycle_start is None:
            cycle_start = len(a2)
        if ea is not None:
            kind = ea.origin[0]
            if kind == "orig":
                prefix.append((t, ea.origin[1]))
            elif kind == "switch":
                switch_time = t
                split = len(a2)
            elif kind in ("twin", "fault"):
                twin.append((t, ea.origin[1]))
                if kind == "fault":
                    fault_time = t
        if eb is not None:
            a2.append((t, eb.origin))
    if cycle_start is None:
        cycle_start = len(a2)
    if switch_time is None or fault_time is None:
        raise RuntimeError("accepting lasso does not pass through the twin copy")
    prefix_steps = _steps(prefix, switch_time)
    twin_steps = _steps([(t - switch_time, e) for t, e in twin])
    a2_steps = _steps(a2)
    obs = n.ta.alphabet.observable
    return TaWitness(
        prefaulty=run_trace(prefix_steps),
        switch_time=switch_time,
        fault_time=fault_time,
        concretized_prefix=run_trace(prefix_steps, obs),
        lasso=lasso,
        lasso_nodes=tuple(g.describe(v) for v in lasso.nodes()),
        prefix_steps=prefix_steps,
        twin_steps=twin_steps,
        nonfaulty_steps=a2_steps,
        split=split,
        cycle_start=cycle_start,
        scale=scale,
    )


def _self_check(n: NormalizedTA, w: TaWitness):
    ta = n.ta
    end = replay(ta, w.prefix_steps)
    replay(ta, w.twin_steps, start=end)
    replay(ta, w.nonfaulty_steps)
    if any(st.edge is not None and st.edge.label == ta.fault for st in w.prefix_steps + w.nonfaulty_steps):
        raise RuntimeError("witness run contains the fault")


def check_delta_predictable(a, delta: int, divergence: bool = True,
                            sampling: Optional[SamplingSpec] = None,
                            witness: bool = True) -> TaVerdict:
    """Decide Δ-predictability (in sampling periods when `sampling` is set)."""
    if delta < 0:
        raise ModelError("the bound must be non-negative")
    n = normalize(a)
    scale = 1
    if sampling is not None:
        scale = sampling.scale
        n = n.scaled(scale)
    if n.fault_sink is None or not fault_reachable(n.ta):
        return TaVerdict(True, delta, None, sampling, divergence)
    plant = twin_plant(n, delta, divergence, sampling)
    g = region_graph(plant, lazy=True)
    empty, lasso = buchi_empty(g)
    if empty:
        return TaVerdict(True, delta, None, sampling, divergence, len(g))
    w = None
    if witness:
        w = _witness(n, g, lasso, scale)
        _self_check(n, w)
    return TaVerdict(False, delta, w, sampling, divergence, len(g))


def kappa_bound(a, sampling: Optional[SamplingSpec] = None):
    """Upper end of the anticipation search, in sampling periods if sampled."""
    n = normalize(a)
    if n.fault_sink is None:
        return INF
    if sampling is None:
        return min_time_bound(n.ta)
    k = min_time_bound(n.ta.scaled(sampling.scale))
    return k if k == INF else k // sampling.period


def max_delta(a, divergence: bool = True, sampling: Optional[SamplingSpec] = None):
    """Largest Δ with a Δ-predictable model, ``INF`` when f is unreachable and
    ``NOT_PREDICTABLE`` when not even 0-predictable."""
    n = normalize(a)
    hi = kappa_bound(n, sampling)
    if hi == INF:
        return INF

    def ok(d):
        return check_delta_predictable(n, d, divergence, sampling, witness=False).predictable

    if not ok(0):
        return NOT_PREDICTABLE
    lo = 0
    if ok(hi):
        return hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


# --------------------------------------------------------------------------
# reachability reduction


def reduce_reachability(a: TimedAutomaton, target: str) -> TimedAutomaton:
    """Model that is not predictable exactly when `target` is reachable.

    From `target` both the fault and a fresh unobservable event lead to a
    new location END' looping every time unit on each other event.
    """
    if not a.clocks:
        raise ModelError("the reduction needs a model with at least one clock")
    if target not in a.locations:
        raise ModelError(f"unknown location {target!r}")
    if END_PRIME in a.locations:
        raise ModelError(f"location name {END_PRIME!r} is reserved")
    f = a.fault
    if any(e.label == f for e in a.edges):
        raise ModelError("the reduction expects a model without fault edges")
    x = a.clocks[0]
    u = "u"
    while u in a.alphabet.events:
        u += "_"
    alpha = EventAlphabet(a.alphabet.observable, a.alphabet.unobservable | {u}, f)
    edges = list(a.edges)
    edges.append(TaEdge(target, TRUE, f, {x}, END_PRIME))
    edges.append(TaEdge(target, TRUE, u, {x}, END_PRIME))
    for ev in sorted(alpha.events - {f}):
        edges.append(TaEdge(END_PRIME, atom(x, "==", 1), ev, {x}, END_PRIME))
    invs = dict(a.invariants)
    invs[END_PRIME] = atom(x, "<=", 1)
    return a.replace(
        locations=a.locations + (END_PRIME,),
        alphabet=alpha,
        edges=tuple(edges),
        invariants=invs,
        final=None,
        repeated=None,
        components=None,
    )
