"""Exact inference by exhaustive enumeration of the derivation tree."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
import math

from .engine import (
    DEFAULT_MAX_STEPS,
    REFINED,
    ExecutionStrategy,
    SwitchDraw,
    transitions,
)
from .errors import LimitExceeded
from .rules import Observation, Program
from .runtime import FAILED, FAILED_CLASS, Distribution, SwitchRegistry, canonical

DEFAULT_MAX_LEAVES = 10**6


@dataclass(frozen=True)
class Limits:
    max_depth: int = DEFAULT_MAX_STEPS
    max_leaves: int = DEFAULT_MAX_LEAVES


@dataclass(frozen=True)
class Explanation:
    """Switch draws along one derivation, as counts, plus the fixed-probability factor."""

    draws: tuple  # ((switch, outcome), count) pairs, sorted
    fixed_factor: float

    def probability(self, registry: SwitchRegistry) -> float:
        p = self.fixed_factor
        for (switch, outcome), count in self.draws:
            p *= registry.probability(switch, outcome) ** count
        return p

    def switches(self) -> set:
        return {sw for (sw, _), _ in self.draws}

    def __str__(self) -> str:
        parts = [f"{sw}={v}^{n}" if n > 1 else f"{sw}={v}" for (sw, v), n in self.draws]
        return "{" + ", ".join(parts) + f"}} x {self.fixed_factor!r}"


@dataclass(frozen=True)
class WeightedLeaf:
    store: object  # tuple of constraints, or FAILED
    probability: float
    explanation: Explanation
    choices: tuple

    @property
    def failed(self) -> bool:
        return self.store is FAILED

    @property
    def key(self) -> str:
        return FAILED_CLASS if self.store is FAILED else canonical(self.store)


def _explanation(draws, fixed: float) -> Explanation:
    counts: Counter = Counter()
    node = draws
    while node is not None:
        counts[node[0]] += 1
        node = node[1]
    items = sorted(counts.items(), key=lambda kv: (str(kv[0][0]), str(kv[0][1])))
    return Explanation(tuple(items), fixed)


def enumerate_leaves(
    program: Program,
    query,
    strategy: ExecutionStrategy = REFINED,
    registry: SwitchRegistry | None = None,
    limits: Limits = Limits(),
) -> list[WeightedLeaf]:
    """Every leaf of the derivation tree, depth first, with its path probability."""
    return list(iter_leaves(program, query, strategy, registry, limits))


def iter_leaves(
    program: Program,
    query,
    strategy: ExecutionStrategy = REFINED,
    registry: SwitchRegistry | None = None,
    limits: Limits = Limits(),
):
    """Lazy version of :func:`enumerate_leaves`, for trees too big to hold."""
    if registry is None:
        registry = SwitchRegistry.for_program(program)
    n_leaves = 0
    # (state, prob, switch draws, fixed factor, depth, choices)
    stack = [(strategy.initial_state(query), 1.0, None, 1.0, 0, ())]
    while stack:
        state, prob, draws, fixed, depth, choices = stack.pop()
        while True:
            alts = transitions(state, program, strategy, registry)
            if len(alts) != 1:
                break
            event, state = alts[0]
            depth += 1
            if isinstance(event, SwitchDraw):
                draws = ((event.switch, event.outcome), draws)
            else:
                fixed *= event.prob
            prob *= event.prob
            if depth > limits.max_depth:
                raise LimitExceeded("max_depth", limits.max_depth)
        if not alts:
            store = FAILED if state is FAILED else state.chr_store()
            n_leaves += 1
            if n_leaves > limits.max_leaves:
                raise LimitExceeded("max_leaves", limits.max_leaves)
            yield WeightedLeaf(store, prob, _explanation(draws, fixed), choices)
            continue
        if depth + 1 > limits.max_depth:
            raise LimitExceeded("max_depth", limits.max_depth)
        for i in range(len(alts) - 1, -1, -1):
            event, new = alts[i]
            if isinstance(event, SwitchDraw):
                entry = (new, prob * event.prob, ((event.switch, event.outcome), draws),
                         fixed, depth + 1, choices + (i,))
            else:
                entry = (new, prob * event.prob, draws, fixed * event.prob, depth + 1,
                         choices + (i,))
            stack.append(entry)


def match_full(store, answer) -> bool:
    if store is FAILED:
        return False
    return Counter(store) == Counter(answer)


def match_partial(store, answer, negated=()) -> bool:
    """``answer`` is contained in the store and no negated group is in the rest.

    Each element of ``negated`` is a constraint or a tuple of constraints; a
    group is violated when all of it occurs in ``store - answer``.
    """
    if store is FAILED:
        return False
    have = Counter(store)
    want = Counter(answer)
    if not want <= have:
        return False
    rest = have - want
    for group in negated:
        group = Counter(group if isinstance(group, tuple) else (group,))
        if group <= rest:
            return False
    return True


def matches(store, observation: Observation) -> bool:
    if observation.is_full:
        return match_full(store, observation.answer)
    return match_partial(store, observation.answer, observation.negated)


def probability(
    program: Program,
    observation: Observation,
    strategy: ExecutionStrategy = REFINED,
    registry: SwitchRegistry | None = None,
    limits: Limits = Limits(),
) -> float:
    """Total probability of the derivations whose final store satisfies ``observation``."""
    leaves = enumerate_leaves(program, observation.query, strategy, registry, limits)
    return math.fsum(leaf.probability for leaf in leaves if matches(leaf.store, observation))


def aggregate(leaves) -> Distribution:
    buckets: dict = {}
    for leaf in leaves:
        buckets.setdefault(leaf.key, []).append(leaf.probability)
    return Distribution({k: math.fsum(v) for k, v in buckets.items()})


def distribution(
    program: Program,
    query,
    strategy: ExecutionStrategy = REFINED,
    registry: SwitchRegistry | None = None,
    limits: Limits = Limits(),
) -> Distribution:
    """Probability of each equivalence class of final states (plus the failed class)."""
    return aggregate(enumerate_leaves(program, query, strategy, registry, limits))


def derivation_tree_dot(
    program: Program,
    query,
    strategy: ExecutionStrategy = REFINED,
    registry: SwitchRegistry | None = None,
    limits: Limits = Limits(),
) -> str:
    """Graphviz rendering of the branching structure of the derivation tree.

    Deterministic chains are collapsed; a node shows the constraint store at a
    branching point or leaf, an edge the drawn outcome and its probability.
    """
    if registry is None:
        registry = SwitchRegistry.for_program(program)
    lines = ["digraph derivations {", "  node [shape=box, fontname=monospace];"]
    counter = 0

    def label(state) -> str:
        if state is FAILED:
            return "fail"
        return "\\n".join(str(c) for c in state.chr_store()) or "(empty)"

    stack = [(strategy.initial_state(query), None, "")]
    while stack:
        state, parent, edge = stack.pop()
        depth = 0
        while True:
            alts = transitions(state, program, strategy, registry)
            if len(alts) != 1:
                break
            state = alts[0][1]
            depth += 1
            if depth > limits.max_depth:
                raise LimitExceeded("max_depth", limits.max_depth)
        node = f"n{counter}"
        counter += 1
        if counter > limits.max_leaves:
            raise LimitExceeded("max_leaves", limits.max_leaves)
        shape = "" if alts else ", style=rounded"
        lines.append(f'  {node} [label="{label(state)}"{shape}];')
        if parent is not None:
            lines.append(f'  {parent} -> {node} [label="{edge}"];')
        for event, new in reversed(alts):
            where = event.switch if isinstance(event, SwitchDraw) else event.site
            stack.append((new, node, f"{where}={event.outcome} ({event.prob:.4g})"))
    lines.append("}")
    return "\n".join(lines) + "\n"
