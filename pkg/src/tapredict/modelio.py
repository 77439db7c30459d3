"""JSON model files and DOT rendering."""

from __future__ import annotations

import json
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .automata import EPS_NAME, EPSILON, EventAlphabet, FaEdge, FiniteAutomaton, ModelError
from .timed.automaton import TaEdge, TimedAutomaton
from .timed.constraints import ClockConstraint, GuardSyntaxError

_TOP_FA = {"type", "locations", "initial", "events", "edges", "final", "repeated"}
_TOP_TA = _TOP_FA | {"clocks", "invariants"}
_EDGE_FA = {"src", "event", "dst"}
_EDGE_TA = _EDGE_FA | {"guard", "resets"}
_EVENTS = {"observable", "unobservable", "fault"}

BUNDLED = ("G", "G_untimed", "B")


def _strings(value, what):
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ModelError(f"{what} must be an array of strings")
    if len(set(value)) != len(value):
        raise ModelError(f"{what} contains duplicates")
    return value


def _check_keys(obj, allowed, what):
    if not isinstance(obj, dict):
        raise ModelError(f"{what} must be an object")
    unknown = set(obj) - allowed
    if unknown:
        raise ModelError(f"unknown field(s) {sorted(unknown)} in {what}")


def _label(value, where):
    if value is None or value == EPS_NAME:
        return EPSILON
    if not isinstance(value, str):
        raise ModelError(f"{where}: event must be a string or null")
    if value == EPSILON:
        return EPSILON
    return value


def parse_model(data: dict):
    """Build a FiniteAutomaton or TimedAutomaton from decoded JSON."""
    if not isinstance(data, dict):
        raise ModelError("a model must be a JSON object")
    kind = data.get("type")
    if kind not in ("fa", "ta"):
        raise ModelError('field "type" must be "fa" or "ta"')
    timed = kind == "ta"
    _check_keys(data, _TOP_TA if timed else _TOP_FA, "model")
    for key in ("locations", "initial", "events", "edges"):
        if key not in data:
            raise ModelError(f'missing field "{key}"')
    locations = _strings(data["locations"], "locations")
    if not isinstance(data["initial"], str):
        raise ModelError("initial must be a string")
    ev = data["events"]
    _check_keys(ev, _EVENTS, "events")
    if "fault" not in ev:
        raise ModelError('missing field "events.fault"')
    alphabet = EventAlphabet(
        _strings(ev.get("observable", []), "events.observable"),
        _strings(ev.get("unobservable", []), "events.unobservable"),
        ev["fault"],
    )
    final = data.get("final")
    repeated = data.get("repeated")
    if final is not None:
        final = _strings(final, "final")
    if repeated is not None:
        repeated = _strings(repeated, "repeated")
    if not isinstance(data["edges"], list):
        raise ModelError("edges must be an array")
    if not timed:
        edges = []
        for i, e in enumerate(data["edges"]):
            _check_keys(e, _EDGE_FA, f"edge {i}")
            edges.append(FaEdge(e.get("src"), _label(e.get("event"), f"edge {i}"), e.get("dst")))
        return FiniteAutomaton(tuple(locations), data["initial"], tuple(edges), alphabet, final, repeated)

    clocks = _strings(data.get("clocks", []), "clocks")
    edges = []
    for i, e in enumerate(data["edges"]):
        _check_keys(e, _EDGE_TA, f"edge {i}")
        try:
            guard = ClockConstraint.parse(e.get("guard"))
        except GuardSyntaxError as exc:
            raise ModelError(f"edge {i} guard: {exc}") from exc
        resets = _strings(e.get("resets", []), f"edge {i} resets")
        edges.append(
            TaEdge(e.get("src"), guard, _label(e.get("event"), f"edge {i}"), resets, e.get("dst"))
        )
    raw_inv = data.get("invariants", {})
    if not isinstance(raw_inv, dict):
        raise ModelError("invariants must be an object keyed by location")
    invs = {}
    for q, text in raw_inv.items():
        try:
            invs[q] = ClockConstraint.parse(text)
        except GuardSyntaxError as exc:
            raise ModelError(f"invariant of {q!r}: {exc}") from exc
    return TimedAutomaton(
        tuple(locations), data["initial"], tuple(clocks), alphabet, tuple(edges), invs, final, repeated
    )


def loads(text: str):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_model(data)


def load_model(path):
    return loads(Path(path).read_text(encoding="utf-8"))


def bundled_model(name: str):
    """One of the example models shipped with the package."""
    if name not in BUNDLED:
        raise KeyError(name)
    text = resources.files("tapredict.models").joinpath(f"{name}.json").read_text(encoding="utf-8")
    return loads(text)


def _label_out(label):
    return None if label == EPSILON else label


def dump_model(model) -> dict:
    """Inverse of parse_model (final/repeated only when not all locations)."""
    timed = isinstance(model, TimedAutomaton)
    alpha = model.alphabet
    out = {
        "type": "ta" if timed else "fa",
        "locations": list(model.locations),
        "initial": model.initial,
        "events": {
            "observable": sorted(alpha.observable),
            "unobservable": sorted(alpha.unobservable),
            "fault": alpha.fault,
        },
    }
    if timed:
        out["clocks"] = list(model.clocks)
        out["invariants"] = {q: str(g) for q, g in model.invariants.items() if not g.is_true()}
        out["edges"] = [
            {
                "src": e.src,
                "event": _label_out(e.label),
                "dst": e.dst,
                "guard": str(e.guard),
                "resets": sorted(e.resets),
            }
            for e in model.edges
        ]
    else:
        out["edges"] = [
            {"src": e.src, "event": _label_out(e.label), "dst": e.dst} for e in model.edges
        ]
    every = frozenset(model.locations)
    if model.final != every:
        out["final"] = [q for q in model.locations if q in model.final]
    if model.repeated != every:
        out["repeated"] = [q for q in model.locations if q in model.repeated]
    return out


def dumps(model) -> str:
    return json.dumps(dump_model(model), indent=2, ensure_ascii=False) + "\n"


def _q(s):
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def to_dot(model, name="model") -> str:
    """Graphviz rendering of an automaton; repeated locations are doubled."""
    timed = isinstance(model, TimedAutomaton)
    every = frozenset(model.locations)
    lines = [f"digraph {_q(name)} {{", "  rankdir=LR;", '  __init [shape=point];']
    for q in model.locations:
        label = q
        if timed and not model.inv(q).is_true():
            label += f"\n[{model.inv(q)}]"
        attrs = [f"label={_q(label)}"]
        if model.repeated != every and q in model.repeated:
            attrs.append("peripheries=2")
        lines.append(f"  {_q(q)} [{', '.join(attrs)}];")
    lines.append(f"  __init -> {_q(model.initial)};")
    for e in model.edges:
        if timed:
            parts = [] if e.guard.is_true() else [str(e.guard)]
            parts.append("ε" if e.label == EPSILON else e.label)
            if e.resets:
                parts.append("{" + ",".join(sorted(e.resets)) + "}:=0")
            label = ", ".join(parts)
        else:
            label = "ε" if e.label == EPSILON else e.label
        lines.append(f"  {_q(e.src)} -> {_q(e.dst)} [label={_q(label)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def parse_rational(value) -> Fraction:
    """Exact time value from a JSON number, an int or a ``p/q`` string."""
    if isinstance(value, bool):
        raise ModelError(f"invalid time value {value!r}")
    if isinstance(value, float):
        value = repr(value)
    try:
        out = Fraction(value)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ModelError(f"invalid time value {value!r}") from exc
    if out < 0:
        raise ModelError(f"negative time value {value!r}")
    return out


def loads_trace(text: str):
    """Timed word from JSON lines ``{"delay": d, "event": a}``; the event may
    be omitted on the last line to add a trailing delay."""
    from .timed.automaton import TimedWord

    delays, events = [Fraction(0)], []
    closed = False
    for no, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        if closed:
            raise ModelError(f"trace line {no}: only the last line may omit the event")
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ModelError(f"trace line {no}, column {exc.colno}: {exc.msg}") from exc
        if not isinstance(obj, dict) or not set(obj) <= {"delay", "event"}:
            raise ModelError(f'trace line {no}: expected an object with "delay" and "event"')
        try:
            delays[-1] += parse_rational(obj.get("delay", 0))
        except ModelError as exc:
            raise ModelError(f"trace line {no}: {exc}") from None
        event = obj.get("event")
        if event is None:
            closed = True
            continue
        if not isinstance(event, str):
            raise ModelError(f"trace line {no}: event must be a string")
        events.append(event)
        delays.append(Fraction(0))
    return TimedWord(tuple(delays), tuple(events))


def load_trace(path):
    return loads_trace(Path(path).read_text(encoding="utf-8"))
