"""Bounded fault predictability for partially observable finite and timed automata."""

from .automata import EPSILON, INF, EventAlphabet, FaEdge, FiniteAutomaton, ModelError, UntimedWord
from .fa_predict import NOT_PREDICTABLE, FaVerdict, FaWitness, check_k_predictable, max_k, predictable_fa
from .modelio import bundled_model, dump_model, dumps, load_model, load_trace, loads, parse_model, to_dot
from .predictor import (
    InconsistentObservation,
    PredictionTrace,
    StateEstimate,
    WinningSet,
    initial_estimate,
    precompute_W,
    run_predictor,
    step,
    verdict,
)
from .ta_predict import (
    NormalizedTA,
    SamplingSpec,
    TaVerdict,
    TaWitness,
    check_delta_predictable,
    kappa_bound,
    max_delta,
    normalize,
    reduce_reachability,
    twin_plant,
)
from .timed.automaton import TaEdge, TimedAutomaton, TimedWord
from .timed.constraints import TRUE, ClockConstraint, atom

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
