"""A native engine for chance rules: probabilistic multiset rewriting.

Typical use::

    from chrism import parse_program, parse_observation, probability

    program = parse_program("toss <=> head:0.5 ; tail:0.5.")
    probability(program, parse_observation("toss,toss <==> head,tail"))  # 0.5
"""

from .ambiguity import Ambiguous, NotRefutedBy, StrategyVariant, check_ambiguity, generate_variants
from .engine import (
    REFINED,
    Deterministic,
    ExecutionStrategy,
    FixedDraw,
    RandomChooser,
    ReplayChooser,
    SampleResult,
    SwitchDraw,
    format_trace,
    run,
    run_sample,
    step,
    transitions,
)
from .errors import (
    ChrismError,
    EngineError,
    EvaluationError,
    ImpossibleObservation,
    InstantiationError,
    LimitExceeded,
    ParseError,
    RegistryError,
    UserError,
    ValidationError,
)
from .inference import (
    Explanation,
    Limits,
    WeightedLeaf,
    derivation_tree_dot,
    distribution,
    enumerate_leaves,
    match_full,
    match_partial,
    probability,
)
from .learning import EMConfig, EMResult, collect_explanations, em_learn, log_likelihood, prepare_data
from .rules import ChanceRule, Observation, Program
from .runtime import FAILED, Distribution, ExecutionState, SwitchRegistry, canonical, store_equivalent
from .syntax import (
    desugar_cond,
    parse_observation,
    parse_observations,
    parse_program,
    parse_query,
    parse_term,
)
from .terms import Atom, Compound, Constraint, Float, Int, Var

__version__ = "0.1.0"
