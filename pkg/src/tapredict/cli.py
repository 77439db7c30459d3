"""Command-line interface.

Exit codes: 0 predictable (or success), 1 not predictable, 2 input error,
3 when a cross-check with the oracles disagrees.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .automata import INF, FiniteAutomaton, ModelError, fa_product
from .fa_predict import NOT_PREDICTABLE, build_twin_fa, check_k_predictable, max_k
from .modelio import BUNDLED, bundled_model, dumps, load_model, load_trace, to_dot
from .oracle import (
    OracleRefused,
    fa_oracle_k_predictable,
    gl_oracle,
    random_fa,
    validate_witness,
)
from .predictor import run_predictor
from .ta_predict import (
    SamplingSpec,
    check_delta_predictable,
    check_reserved,
    max_delta,
    model_twin_plant,
    normalize,
    reduce_reachability,
)
from .timed.automaton import TimedAutomaton
from .timed.buchi import tarjan_scc
from .timed.reach import location_reachable, reachable_locations
from .timed.regions import region_graph

SCHEMA = 1
EXIT_OK, EXIT_NOT_PREDICTABLE, EXIT_INPUT, EXIT_DISAGREE = 0, 1, 2, 3


class InputError(Exception):
    """Bad command-line input; reported with exit code 2."""


@dataclass
class RunConfig:
    command: str
    model: Optional[str] = None
    bound: Optional[int] = None
    sample: Optional[SamplingSpec] = None
    allow_zeno: bool = False
    unbounded_ok: bool = False
    witness: Optional[str] = None
    oracle: bool = False
    dump_regions: Optional[str] = None
    dot: Optional[str] = None
    trace: Optional[str] = None
    target: Optional[str] = None
    output: Optional[str] = None
    verify: bool = False
    count: int = 200
    seed: int = 0
    format: str = "json"

    def __post_init__(self):
        if self.bound is not None and self.bound < 0:
            raise InputError("the bound must be non-negative")


# --------------------------------------------------------------------------
# model validation


@dataclass(frozen=True)
class Diagnostic:
    level: str  # "error" or "lint"
    code: str
    message: str

    def to_json(self) -> dict:
        return {"level": self.level, "code": self.code, "message": self.message}


@dataclass
class Diagnostics:
    items: list = field(default_factory=list)
    model: object = None

    @property
    def fatal(self) -> bool:
        return any(d.level == "error" for d in self.items)

    def add(self, level, code, message):
        self.items.append(Diagnostic(level, code, message))


def _silent_cycles(model) -> list:
    """Locations on reachable cycles made of unobservable, non-fault edges.

    Clock constraints are ignored, so this over-approximates.
    """
    locs = list(model.locations)
    index = {q: i for i, q in enumerate(locs)}
    obs, f = model.alphabet.observable, model.fault
    succ = [[] for _ in locs]
    for e in model.edges:
        succ[index[e.src]].append((index[e.dst], e.label not in obs and e.label != f))
    reach = set()
    stack = [index[model.initial]]
    while stack:
        v = stack.pop()
        if v not in reach:
            reach.add(v)
            stack.extend(w for w, _ in succ[v])
    out = []
    silent = [[(w, True) for w, s in succ[v] if s] for v in range(len(locs))]
    for comp in tarjan_scc(len(locs), silent, sorted(reach)):
        if not reach & set(comp):
            continue
        if len(comp) > 1 or any(w == comp[0] for w, _ in silent[comp[0]]):
            out.append(sorted(locs[v] for v in comp))
    return sorted(out)


def validate_model(path, model=None) -> Diagnostics:
    """Fatal errors and assumption lints for a model file.

    A reachable location without a clock upper bound is only a lint here;
    the deciding subcommands refuse such models unless told otherwise.
    """
    diags = Diagnostics()
    if model is None:
        try:
            model = _load(path)
        except InputError as exc:
            diags.add("error", "load", str(exc))
            return diags
    diags.model = model
    if isinstance(model, TimedAutomaton):
        try:
            check_reserved(model, allow_sink=True)
            n = normalize(model)
        except ModelError as exc:
            diags.add("error", "reserved-name", str(exc))
            return diags
        live = reachable_locations(n.ta)
        for q in n.ta.unbounded_locations():
            if q in live:
                diags.add("lint", "unbounded-location",
                          f"time can diverge in reachable location {q!r}: no clock upper bound in its invariant")
            elif q in model.locations:
                diags.add("lint", "unbounded-unreachable",
                          f"location {q!r} has no clock upper bound but is unreachable once faults are redirected")
    for cycle in _silent_cycles(model):
        diags.add("lint", "silent-cycle",
                  f"cycle of unobservable events through {', '.join(cycle)}; runs may stop being observed")
    if not any(e.label == model.fault for e in model.edges):
        diags.add("lint", "no-fault", f"no edge carries the fault event {model.fault!r}")
    return diags


# --------------------------------------------------------------------------
# helpers


def _load(path):
    if path is None:
        raise InputError("--model is required")
    if path.startswith("bundled:"):
        name = path.split(":", 1)[1]
        if name not in BUNDLED:
            raise InputError(f"unknown bundled model {name!r}; choose from {', '.join(BUNDLED)}")
        return bundled_model(name)
    try:
        return load_model(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None
    except ModelError as exc:
        raise InputError(f"{path}: {exc}") from None


def _name(path) -> str:
    if path is None:
        return "model"
    if path.startswith("bundled:"):
        return path.split(":", 1)[1]
    return Path(path).stem


def _bound_json(b):
    if b == INF:
        return "infinite"
    if b == NOT_PREDICTABLE:
        return NOT_PREDICTABLE
    return b


def _require_bound(cfg):
    if cfg.bound is None:
        raise InputError("--bound is required")
    return cfg.bound


def _checked_model(cfg):
    model = _load(cfg.model)
    if isinstance(model, TimedAutomaton):
        diags = validate_model(cfg.model, model)
        errors = [d.message for d in diags.items if d.level == "error"]
        if not cfg.unbounded_ok:
            errors += [d.message + " (use --unbounded-ok to proceed)"
                       for d in diags.items if d.code == "unbounded-location"]
        if errors:
            raise InputError("; ".join(errors))
    elif cfg.sample is not None:
        raise InputError("--sample applies to timed models only")
    return model


def _write(path, text):
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror or exc}") from None


# --------------------------------------------------------------------------
# subcommands; each returns (exit code, JSON payload, human text)


def _oracle_fa(model, k) -> dict:
    out = {}
    try:
        out["fa_oracle"] = fa_oracle_k_predictable(model, k)
    except OracleRefused as exc:
        out["fa_oracle"] = None
        out["refused"] = str(exc)
    if k == 0:
        try:
            out["gl_oracle"] = gl_oracle(model)
        except OracleRefused as exc:
            out["gl_oracle"] = None
            out["refused"] = str(exc)
    return out


def _oracle_corpus(cfg):
    rng = random.Random(cfg.seed)
    mismatches = []
    for i in range(cfg.count):
        a = random_fa(rng)
        k = rng.randint(0, 3)
        v = check_k_predictable(a, k)
        o = fa_oracle_k_predictable(a, k)
        gl = gl_oracle(a)
        zero = check_k_predictable(a, 0).predictable
        ok = v.predictable == o and zero == gl
        if not v.predictable and not validate_witness(a, v):
            ok = False
        if not ok:
            mismatches.append({"index": i, "bound": k, "check": v.predictable, "fa_oracle": o,
                               "check_0": zero, "gl_oracle": gl})
    payload = {"corpus": cfg.count, "seed": cfg.seed, "mismatches": mismatches}
    human = f"{cfg.count} random automata (seed {cfg.seed}): {len(mismatches)} disagreement(s)"
    return (EXIT_DISAGREE if mismatches else EXIT_OK), payload, human


def cmd_check(cfg):
    if cfg.model is None and cfg.oracle:
        return _oracle_corpus(cfg)
    k = _require_bound(cfg)
    model = _checked_model(cfg)
    name = _name(cfg.model)
    if isinstance(model, FiniteAutomaton):
        if cfg.dump_regions:
            raise InputError("--dump-regions applies to timed models only")
        v = check_k_predictable(model, k)
        payload = {"type": "fa", **v.to_json()}
        human = f"{name} is {k}-predictable" if v.predictable else f"{name} is not {k}-predictable"
        if v.witness is not None:
            w = v.witness
            human += (f"\n  prefaulty run: {' '.join(e.src + '-' + e.label + '->' + e.dst for e in w.prefaulty_path) or '(empty)'}"
                      f"\n  f-free lasso: stem {' '.join(w.stem.events) or 'ε'}, cycle {' '.join(w.cycle.events)}")
    else:
        v = check_delta_predictable(model, k, not cfg.allow_zeno, cfg.sample)
        payload = {"type": "ta", **v.to_json()}
        what = f"{k}-predictable" if cfg.sample is None else f"({cfg.sample}, {k})-predictable"
        human = f"{name} is {what}" if v.predictable else f"{name} is not {what}"
        human += f" (anticipation {v.anticipation} time units, {v.regions} regions explored)"
        if v.witness is not None:
            w = v.witness.to_json()
            human += (f"\n  switch at {w['switch_time']}, fault at {w['fault_time']}"
                      f"\n  observed prefix: {w['observed_prefix']}")
        if cfg.dump_regions:
            plant = model_twin_plant(model, k, not cfg.allow_zeno, cfg.sample)
            if plant is None:
                raise InputError("the model has no fault edge; there is no twin plant")
            _write(cfg.dump_regions, region_graph(plant).to_dot())
    if cfg.witness:
        _write(cfg.witness, json.dumps(payload["witness"], indent=2, ensure_ascii=False) + "\n")
    code = EXIT_OK if v.predictable else EXIT_NOT_PREDICTABLE
    if cfg.oracle:
        if isinstance(model, FiniteAutomaton):
            o = _oracle_fa(model, k)
            agree = all(x is None or x == v.predictable for key, x in o.items() if key.endswith("oracle"))
        else:
            o = {}
            agree = True
        if v.witness is not None:
            val = validate_witness(model, v)
            o["witness_valid"] = val.valid
            if not val.valid:
                o["witness_problem"] = val.reason
            agree = agree and val.valid
        o["agree"] = agree
        payload["oracle"] = o
        human += "\n  oracle: " + ("agrees" if agree else "DISAGREES " + json.dumps(o))
        if not agree:
            code = EXIT_DISAGREE
    return code, payload, human


def cmd_max_bound(cfg):
    model = _checked_model(cfg)
    name = _name(cfg.model)
    if isinstance(model, FiniteAutomaton):
        b = max_k(model)
        payload = {"type": "fa", "max_bound": _bound_json(b)}
        if b == INF:
            human = f"{name} never enables the fault; every bound is predictable"
        elif b == NOT_PREDICTABLE:
            human = f"{name} is not 0-predictable"
        else:
            human = f"largest k is M−1 = {b}: {name} is {b}-predictable"
    else:
        b = max_delta(model, not cfg.allow_zeno, cfg.sample)
        payload = {"type": "ta", "max_bound": _bound_json(b),
                   "sampling": None if cfg.sample is None else str(cfg.sample)}
        if isinstance(b, int):
            ant = cfg.sample.anticipation(b) if cfg.sample else Fraction(b)
            payload["anticipation"] = str(ant)
        if b == INF:
            human = f"{name} never enables the fault; every bound is predictable"
        elif b == NOT_PREDICTABLE:
            human = f"{name} is not 0-predictable"
        elif cfg.sample is None:
            human = f"{name} is {b}-predictable and not {b + 1}-predictable"
        else:
            human = (f"largest sampled bound D = {b}: {name} is ({cfg.sample}, {b})-predictable, "
                     f"anticipating {payload['anticipation']} time units")
    code = EXIT_NOT_PREDICTABLE if b == NOT_PREDICTABLE else EXIT_OK
    return code, payload, human


def cmd_export_twin(cfg):
    k = _require_bound(cfg)
    model = _checked_model(cfg)
    if isinstance(model, FiniteAutomaton):
        plant = fa_product(*build_twin_fa(model, k))
    else:
        plant = model_twin_plant(model, k, not cfg.allow_zeno, cfg.sample)
        if plant is None:
            raise InputError("the model has no fault edge; there is no twin plant")
    dot = to_dot(plant, name=f"twin_{_name(cfg.model)}_{k}")
    if cfg.dot:
        _write(cfg.dot, dot)
    if cfg.output:
        _write(cfg.output, dumps(plant))
    payload = {"locations": len(plant.locations), "edges": len(plant.edges),
               "dot": cfg.dot, "model": cfg.output}
    human = f"twin plant: {len(plant.locations)} locations, {len(plant.edges)} edges"
    if not cfg.dot and not cfg.output:
        return EXIT_OK, None, dot.rstrip("\n")
    return EXIT_OK, payload, human


def cmd_predict(cfg):
    k = _require_bound(cfg)
    model = _checked_model(cfg)
    if not isinstance(model, TimedAutomaton):
        raise InputError("predict needs a timed model")
    if cfg.trace is None:
        raise InputError("--trace is required")
    try:
        trace = load_trace(cfg.trace)
    except OSError as exc:
        raise InputError(f"cannot read {cfg.trace}: {exc.strerror or exc}") from None
    except ModelError as exc:
        raise InputError(f"{cfg.trace}: {exc}") from None
    unknown = set(trace.events) - model.alphabet.observable
    if unknown:
        raise InputError(f"trace uses events that are not observable: {sorted(unknown)}")
    rate = cfg.sample.rate if cfg.sample else Fraction(1)
    result = run_predictor(model, k, rate, trace, verify=cfg.verify)
    lines = result.to_jsonl().rstrip("\n")
    if result.warning:
        print(f"warning: {result.warning}", file=sys.stderr)
    code = EXIT_INPUT if result.error else EXIT_OK
    if cfg.format == "human":
        rows = [f"t={t}: {v}" for t, v in result.verdicts]
        first = result.first_alarm()
        rows.append(f"first alarm at {first}" if first is not None else "no alarm")
        if result.error:
            rows.append(f"error: {result.error}")
        return code, None, "\n".join(rows)
    return code, None, lines


def cmd_reduce(cfg):
    model = _load(cfg.model)
    if not isinstance(model, TimedAutomaton):
        raise InputError("reduce needs a timed model")
    if cfg.target is None:
        raise InputError("--target is required")
    try:
        reduced = reduce_reachability(model, cfg.target)
    except ModelError as exc:
        raise InputError(str(exc)) from None
    reach = location_reachable(model, {cfg.target})
    v = check_delta_predictable(reduced, 0, witness=False)
    if cfg.output:
        _write(cfg.output, dumps(reduced))
    payload = {"target": cfg.target, "reachable": reach, "predictable": v.predictable,
               "model": cfg.output or json.loads(dumps(reduced))}
    human = (f"{cfg.target} is {'reachable' if reach else 'unreachable'}; the reduced model is "
             f"{'' if v.predictable else 'not '}predictable")
    return (EXIT_OK if v.predictable else EXIT_NOT_PREDICTABLE), payload, human


def cmd_validate(cfg):
    diags = validate_model(cfg.model)
    payload = {"valid": not diags.fatal, "diagnostics": [d.to_json() for d in diags.items]}
    rows = [f"{d.level}: {d.code}: {d.message}" for d in diags.items]
    rows.append("model is valid" if not diags.fatal else "model has fatal errors")
    return (EXIT_INPUT if diags.fatal else EXIT_OK), payload, "\n".join(rows)


COMMANDS = {
    "check": cmd_check,
    "max-bound": cmd_max_bound,
    "export-twin": cmd_export_twin,
    "predict": cmd_predict,
    "reduce": cmd_reduce,
    "validate": cmd_validate,
}


def dispatch(cfg: RunConfig):
    """Run a subcommand; returns ``(exit code, stdout text)``."""
    try:
        code, payload, human = COMMANDS[cfg.command](cfg)
    except (InputError, ModelError) as exc:
        if cfg.format == "json":
            return EXIT_INPUT, json.dumps({"schema": SCHEMA, "error": str(exc)}, ensure_ascii=False)
        return EXIT_INPUT, f"error: {exc}"
    if payload is None or cfg.format == "human":
        return code, human
    return code, json.dumps({"schema": SCHEMA, "command": cfg.command, **payload},
                            indent=2, ensure_ascii=False)


# --------------------------------------------------------------------------
# argument parsing


def _sampling(text):
    try:
        return SamplingSpec.parse(text)
    except ModelError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _nonneg(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError("the bound must be non-negative")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # suppressed defaults let the flags appear before or after the subcommand
    common.add_argument("--format", choices=("json", "human"), default=argparse.SUPPRESS,
                        help="output format (default: json)")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="seed for random oracle corpora (default: 0)")

    def model_args(p, bound=False, sample=False):
        p.add_argument("--model", help="model JSON file, or bundled:<name>")
        if bound:
            p.add_argument("--bound", type=_nonneg, help="anticipation bound (steps, time units or sampling periods)")
        if sample:
            p.add_argument("--sample", type=_sampling, metavar="q/p", help="sampling rate α")
            p.add_argument("--allow-zeno", action="store_true",
                           help="do not require time divergence of the fault-free run")
        p.add_argument("--unbounded-ok", action="store_true",
                       help="accept locations whose invariant bounds no clock")

    parser = argparse.ArgumentParser(
        prog="tapredict", parents=[common],
        description="Bounded fault predictability for finite and timed automata.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="decide predictability for one bound")
    model_args(p, bound=True, sample=True)
    p.add_argument("--witness", metavar="PATH", help="write the witness as JSON")
    p.add_argument("--oracle", action="store_true",
                   help="cross-check with the brute-force oracles (random corpus without --model)")
    p.add_argument("--count", type=int, default=200, help="size of the random oracle corpus")
    p.add_argument("--dump-regions", metavar="PATH", help="write the twin plant region graph as DOT")

    p = sub.add_parser("max-bound", parents=[common], help="largest predictable bound")
    model_args(p, sample=True)

    p = sub.add_parser("export-twin", parents=[common], help="export the twin plant")
    model_args(p, bound=True, sample=True)
    p.add_argument("--dot", metavar="PATH", help="write Graphviz DOT")
    p.add_argument("--output", metavar="PATH", help="write the twin plant as a model JSON file")

    p = sub.add_parser("predict", parents=[common], help="run the online predictor on a trace")
    model_args(p, bound=True)
    p.add_argument("--sample", type=_sampling, metavar="q/p", help="sampling rate α (default 1)")
    p.add_argument("--trace", metavar="PATH", help="JSON-lines timed trace")
    p.add_argument("--verify", action="store_true", help="warn when the model is not predictable for these parameters")

    p = sub.add_parser("reduce", parents=[common], help="reachability-to-predictability reduction")
    model_args(p)
    p.add_argument("--target", help="location whose reachability is encoded")
    p.add_argument("--output", metavar="PATH", help="write the reduced model")

    p = sub.add_parser("validate", parents=[common], help="report model errors and lints")
    model_args(p)
    return parser


def parse_config(argv) -> RunConfig:
    args = build_parser().parse_args(argv)
    known = {f for f in RunConfig.__dataclass_fields__}
    return RunConfig(**{k: v for k, v in vars(args).items() if k in known})


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    code, text = dispatch(cfg)
    if text:
        print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
