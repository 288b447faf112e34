"""Probabilistic multiset rewriting: the transition relation and sampling.

A state's outgoing transitions are computed by :func:`transitions` under an
:class:`ExecutionStrategy`. The strategy fixes every non-probabilistic
choice, so a state has either no transition (it is final), one deterministic
transition (Solve, Fail, Introduce) or a set of probabilistic alternatives
(one disjunction, or one rule instance that may or may not apply) whose
probabilities sum to one. Sampling walks one path through this tree with a
:class:`RandomChooser`; exact inference enumerates all of it.

The default strategy is the refined one: the goal is a stack, a newly
introduced constraint becomes active at once and tries its occurrences in
rule order (heads left to right), partners are tried in ascending
identifier order, and a rule body is executed left to right before the
active constraint resumes.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Sequence

from .errors import EvaluationError, InstantiationError, LimitExceeded
from .rules import (
    RULE_OUTCOMES,
    Builtin,
    Const,
    Disjunction,
    Eval,
    Experiment,
    IfThenElse,
    Program,
    format_goal,
)
from .runtime import (
    FAILED,
    Active,
    ExecutionState,
    HistoryEntry,
    IdentifiedConstraint,
    SwitchRegistry,
    initial_state,
    push_all,
)
from .terms import (
    Atom,
    Compound,
    Constraint,
    Float,
    Int,
    Var,
    is_ground,
    match,
    substitute,
    term_vars,
    unify,
)

DEFAULT_MAX_STEPS = 10**6


# -- strategies ----------------------------------------------------------------


@dataclass(frozen=True)
class ExecutionStrategy:
    """Resolution of the non-probabilistic choices.

    ``rule_order`` lists rule ids by occurrence priority (None means program
    order). ``partner_order`` is ``"ascending"`` or ``"descending"`` store
    identifier order. ``query_order`` ``"reverse"`` introduces the initial
    query right to left, which lies outside the refined class.
    """

    rule_order: tuple | None = None
    partner_order: str = "ascending"
    query_order: str = "forward"
    label: str = "refined"

    def initial_state(self, query) -> ExecutionState:
        query = tuple(query)
        if self.query_order == "reverse":
            query = query[::-1]
        return initial_state(query)


REFINED = ExecutionStrategy()


class _Compiled:
    def __init__(self, program: Program, strategy: ExecutionStrategy):
        self.program = program
        self.descending = strategy.partner_order == "descending"
        by_id = {r.rule_id: r for r in program.rules}
        order = strategy.rule_order or tuple(by_id)
        if sorted(order) != sorted(by_id):
            raise ValueError(f"rule order {order} is not a permutation of the program's rules")
        self.occurrences: dict = {}
        for rid in order:
            rule = by_id[rid]
            for pos, head in enumerate(rule.heads):
                self.occurrences.setdefault(head.key, []).append((rule, pos))


_compiled_cache: dict = {}


def _compile(program: Program, strategy: ExecutionStrategy) -> _Compiled:
    key = (id(program), strategy)
    hit = _compiled_cache.get(key)
    if hit is not None and hit.program is program:
        return hit
    if len(_compiled_cache) > 256:
        _compiled_cache.clear()
    comp = _compiled_cache[key] = _Compiled(program, strategy)
    return comp


# -- events --------------------------------------------------------------------


@dataclass(frozen=True)
class Deterministic:
    kind: str
    detail: object  # the goal item involved; rendered only for traces
    prob: float = 1.0

    def trace_line(self) -> str:
        d = self.detail
        text = format_goal(d) if isinstance(d, (Builtin, IfThenElse)) else str(d)
        return f"{self.kind} {text} - p=1"


@dataclass(frozen=True)
class SwitchDraw:
    """An outcome drawn from a registry switch (learnable)."""

    switch: object
    outcome: object
    prob: float
    transition: str

    def trace_line(self) -> str:
        return f"{self.transition} {self.switch} {self.outcome} p={self.prob!r}"


@dataclass(frozen=True)
class FixedDraw:
    """An outcome of a fixed probability: a number, ``eval``, or an inline disjunction."""

    site: str
    outcome: object
    prob: float
    transition: str

    def trace_line(self) -> str:
        return f"{self.transition} {self.site} {self.outcome} p={self.prob!r}"


# -- arithmetic and builtins -------------------------------------------------


def eval_arith(t, bindings) -> int | float:
    if isinstance(t, Var):
        t = substitute(t, bindings)
        if isinstance(t, Var):
            raise InstantiationError(f"arithmetic on unbound variable {t}")
    if isinstance(t, (Int, Float)):
        return t.value
    if isinstance(t, Compound):
        if len(t.args) == 1 and t.functor == "-":
            return -eval_arith(t.args[0], bindings)
        if len(t.args) == 2:
            a = eval_arith(t.args[0], bindings)
            b = eval_arith(t.args[1], bindings)
            op = t.functor
            if op == "+":
                return a + b
            if op == "-":
                return a - b
            if op == "*":
                return a * b
            if op in ("/", "//", "mod") and b == 0:
                raise EvaluationError(f"division by zero in {substitute(t, bindings)}")
            if op == "/":
                if isinstance(a, int) and isinstance(b, int) and a % b == 0:
                    return a // b
                return a / b
            if op in ("//", "mod"):
                if not (isinstance(a, int) and isinstance(b, int)):
                    raise EvaluationError(f"{op} needs integers: {substitute(t, bindings)}")
                if op == "mod":
                    return a % b
                q = abs(a) // abs(b)
                return q if (a >= 0) == (b >= 0) else -q
    raise EvaluationError(f"not an arithmetic expression: {substitute(t, bindings)}")


def _number_term(v) -> Int | Float:
    return Int(v) if isinstance(v, int) else Float(float(v))


_COMPARE = {
    "<": lambda a, b: a < b,
    ">": lambda a, b: a > b,
    "=<": lambda a, b: a <= b,
    ">=": lambda a, b: a >= b,
    "=:=": lambda a, b: a == b,
    "=\\=": lambda a, b: a != b,
}


def solve(goal, bindings: dict) -> dict | None:
    """Run a builtin goal; return the extended bindings or None if it fails."""
    if isinstance(goal, IfThenElse):
        b = solve_all(goal.cond, bindings)
        if b is not None:
            return solve_all(goal.then, b)
        if not goal.otherwise:
            return None
        return solve_all(goal.otherwise, bindings)
    t = goal.goal if isinstance(goal, Builtin) else goal
    if t == Atom("true"):
        return bindings
    if t == Atom("fail"):
        return None
    op = t.functor
    left, right = t.args
    if op in _COMPARE:
        return bindings if _COMPARE[op](eval_arith(left, bindings), eval_arith(right, bindings)) else None
    if op == "is":
        return unify(left, _number_term(eval_arith(right, bindings)), bindings)
    if op == "=":
        return unify(left, right, bindings)
    if op == "==":
        return bindings if substitute(left, bindings) == substitute(right, bindings) else None
    if op == "\\==":
        return bindings if substitute(left, bindings) != substitute(right, bindings) else None
    raise EvaluationError(f"unknown builtin {t}")


def solve_all(goals: Sequence, bindings: dict) -> dict | None:
    for g in goals:
        bindings = solve(g, bindings)
        if bindings is None:
            return None
    return bindings


def _subst_item(item, bindings):
    if isinstance(item, Constraint):
        return substitute(item, bindings)
    if isinstance(item, Builtin):
        return Builtin(substitute(item.goal, bindings))
    if isinstance(item, IfThenElse):
        return IfThenElse(
            tuple(_subst_item(g, bindings) for g in item.cond),
            tuple(_subst_item(g, bindings) for g in item.then),
            tuple(_subst_item(g, bindings) for g in item.otherwise),
        )
    if isinstance(item, Disjunction):
        selector = item.selector
        if selector is not None:
            selector = Experiment(substitute(selector.name, bindings))
        return Disjunction(
            tuple(tuple(_subst_item(x, bindings) for x in b) for b in item.branches),
            item.site,
            item.weights,
            selector,
        )
    if isinstance(item, Active):
        return item
    raise TypeError(item)


def _item_vars(item) -> set:
    if isinstance(item, Constraint):
        return term_vars(item)
    if isinstance(item, Builtin):
        return term_vars(item.goal)
    if isinstance(item, IfThenElse):
        out = set()
        for g in item.cond + item.then + item.otherwise:
            out |= _item_vars(g)
        return out
    if isinstance(item, Disjunction):
        out = term_vars(item.selector.name) if item.selector is not None else set()
        for b in item.branches:
            for x in b:
                out |= _item_vars(x)
        return out
    return set()


_body_vars_cache: dict = {}


def _instantiate_body(body: tuple, bindings: dict, fresh: int):
    hit = _body_vars_cache.get(id(body))
    if hit is not None and hit[0] is body:
        names = hit[1]
    else:
        names = set()
        for item in body:
            names |= _item_vars(item)
        names = frozenset(names)
        _body_vars_cache[id(body)] = (body, names)
    if not names:
        return list(body), fresh
    local = names.difference(bindings)
    if local:
        bindings = dict(bindings)
        for name in sorted(local):
            bindings[name] = Var(f"_V{fresh}")
            fresh += 1
    return [_subst_item(item, bindings) for item in body], fresh


def _subst_goal(goal, bindings):
    items = []
    node = goal
    while node is not None:
        items.append(_subst_item(node[0], bindings))
        node = node[1]
    return push_all(None, items)


# -- probability expressions ---------------------------------------------------


def evaluate_prob(expr, bindings: dict, registry: SwitchRegistry, site: str = "") -> list:
    """The ``apply``/``skip`` alternatives of a rule probability expression."""
    if isinstance(expr, Const):
        p = expr.p
    elif isinstance(expr, Eval):
        value = eval_arith(expr.expr, bindings)
        if not 0.0 <= value <= 1.0:
            raise EvaluationError(f"eval({expr.expr}) gives {value}, outside [0, 1]")
        p = float(value)
    else:
        name = substitute(expr.name, bindings)
        if not is_ground(name):
            raise InstantiationError(f"experiment name {name} is not ground")
        outcomes, probs = registry.lookup_or_default(name, RULE_OUTCOMES)
        return [SwitchDraw(name, v, q, "maybe-apply") for v, q in zip(outcomes, probs)]
    return [
        FixedDraw(site, "apply", p, "maybe-apply"),
        FixedDraw(site, "skip", 1.0 - p, "maybe-apply"),
    ]


# -- instances -----------------------------------------------------------------


@dataclass(frozen=True)
class Instance:
    rule: object
    ids: tuple
    bindings: dict = field(compare=False)

    @property
    def rule_id(self) -> int:
        return self.rule.rule_id

    @property
    def kept_ids(self) -> tuple:
        return self.ids[: len(self.rule.kept)]

    @property
    def removed_ids(self) -> tuple:
        return self.ids[len(self.rule.kept) :]

    @property
    def entry(self) -> HistoryEntry:
        return HistoryEntry(self.rule.rule_id, self.kept_ids, self.removed_ids)


def _candidates(state: ExecutionState, key, descending: bool) -> list:
    cands = [ic for ic in state.store if ic.constraint.key == key]
    if descending:
        cands.reverse()
    return cands


def _find_at(state: ExecutionState, comp: _Compiled, ic: IdentifiedConstraint, occ):
    rule, pos = occ
    heads = rule.heads
    start = match(heads[pos], ic.constraint, {})
    if start is None:
        return None
    ids = [None] * len(heads)
    ids[pos] = ic.id
    others = [q for q in range(len(heads)) if q != pos]
    pools = [_candidates(state, heads[q].key, comp.descending) for q in others]

    def search(k: int, bindings: dict):
        if k == len(others):
            entry = HistoryEntry(
                rule.rule_id, tuple(ids[: len(rule.kept)]), tuple(ids[len(rule.kept) :])
            )
            if entry in state.history:
                return None
            final = solve_all(rule.guard, bindings)
            if final is None:
                return None
            return Instance(rule, tuple(ids), final)
        q = others[k]
        for cand in pools[k]:
            if cand.id in ids:
                continue
            b = match(heads[q], cand.constraint, bindings)
            if b is None:
                continue
            ids[q] = cand.id
            found = search(k + 1, b)
            ids[q] = None
            if found is not None:
                return found
        return None

    return search(0, start)


def _lookup(state: ExecutionState, cid: int):
    for ic in state.store:
        if ic.id == cid:
            return ic
    return None


def _any_instance(state: ExecutionState, comp: _Compiled):
    """Any untried applicable instance in the whole store, regardless of the goal."""
    store = list(state.store)
    if comp.descending:
        store.reverse()
    for ic in store:
        for occ in comp.occurrences.get(ic.constraint.key, ()):
            inst = _find_at(state, comp, ic, occ)
            if inst is not None:
                return inst
    return None


def _settle(state: ExecutionState, comp: _Compiled):
    """Skip strategy bookkeeping; return (state, instance or None).

    Pops finished or stale activation frames. When the top frame has an
    applicable instance, the state is returned with that frame's occurrence
    pointer advanced to it, together with the instance.
    """
    goal = state.goal
    while goal is not None:
        top, rest = goal
        if not isinstance(top, Active):
            break
        ic = _lookup(state, top.id)
        if ic is not None:
            occs = comp.occurrences.get(ic.constraint.key, ())
            for j in range(top.occ, len(occs)):
                inst = _find_at(state, comp, ic, occs[j])
                if inst is not None:
                    frame = top if j == top.occ else Active(top.id, j)
                    if frame is not top or goal is not state.goal:
                        state = ExecutionState((frame, rest), state.store, state.history,
                                               state.counter, state.fresh)
                    return state, inst
        goal = rest
    if goal is not state.goal:
        state = ExecutionState(goal, state.store, state.history, state.counter, state.fresh)
    # An empty goal needs no store scan: every instance was tried while its
    # youngest constraint was active (see final_state_check).
    return state, None


def final_state_check(state, program: Program, strategy: ExecutionStrategy = REFINED):
    """An instance left applicable in ``state``, or None.

    For a final state of a refined derivation this is always None; tests
    use it to confirm that such states are final for the abstract
    semantics too.
    """
    if state is FAILED:
        return None
    return _any_instance(state, _compile(program, strategy))


def find_instance(state: ExecutionState, program: Program, strategy: ExecutionStrategy = REFINED):
    """The strategy's next untried rule instance whose guard holds, or None.

    Only meaningful when no builtin, constraint or disjunction is pending on
    top of the goal.
    """
    if state is FAILED:
        return None
    _, inst = _settle(state, _compile(program, strategy))
    return inst


def _maybe_apply(state: ExecutionState, inst: Instance, registry: SwitchRegistry) -> list:
    rule = inst.rule
    entry = inst.entry
    history = state.history | {entry}
    out = []
    for event in evaluate_prob(rule.prob, inst.bindings, registry, f"r{rule.rule_id}"):
        if event.prob <= 0.0:
            continue
        if event.outcome == "skip":
            new = ExecutionState(state.goal, state.store, history, state.counter, state.fresh)
        else:
            removed = set(inst.removed_ids)
            store = tuple(ic for ic in state.store if ic.id not in removed) if removed else state.store
            body, fresh = _instantiate_body(rule.body, inst.bindings, state.fresh)
            new = ExecutionState(push_all(state.goal, body), store, history, state.counter, fresh)
        out.append((event, new))
    return out


def transitions(
    state, program: Program, strategy: ExecutionStrategy, registry: SwitchRegistry
) -> list:
    """The strategy-designated outgoing transitions ``[(event, state'), ...]``.

    Empty for final and failed states. Zero-probability alternatives are
    left out.
    """
    if state is FAILED:
        return []
    comp = _compile(program, strategy)
    state, inst = _settle(state, comp)
    if inst is not None:
        return _maybe_apply(state, inst, registry)
    if state.goal is None:
        return []
    top, rest = state.goal
    if isinstance(top, Constraint):
        if not is_ground(top):
            raise InstantiationError(f"constraint {top} is not ground")
        n = state.counter
        new = ExecutionState(
            (Active(n, 0), rest),
            state.store + (IdentifiedConstraint(top, n),),
            state.history,
            n + 1,
            state.fresh,
        )
        return [(Deterministic("introduce", IdentifiedConstraint(top, n)), new)]
    if isinstance(top, (Builtin, IfThenElse)):
        bindings = solve(top, {})
        if bindings is None:
            return [(Deterministic("fail", top), FAILED)]
        if bindings:
            rest = _subst_goal(rest, bindings)
        new = ExecutionState(rest, state.store, state.history, state.counter, state.fresh)
        return [(Deterministic("solve", top), new)]
    if isinstance(top, Disjunction):
        out = []
        if top.weights is not None:
            events = [
                FixedDraw(top.site, i + 1, w, "choice") for i, w in enumerate(top.weights)
            ]
        else:
            name = top.selector.name
            if not is_ground(name):
                raise InstantiationError(f"experiment name {name} is not ground")
            outcomes, probs = registry.lookup_or_default(name, top.outcomes())
            events = [SwitchDraw(name, v, p, "choice") for v, p in zip(outcomes, probs)]
        for event, branch in zip(events, top.branches):
            if event.prob <= 0.0:
                continue
            new = ExecutionState(push_all(rest, branch), state.store, state.history,
                                 state.counter, state.fresh)
            out.append((event, new))
        return out
    raise TypeError(f"unexpected goal item {top!r}")


# -- choosers and stepping -----------------------------------------------------


class RandomChooser:
    """Draws alternatives with exactly their annotated probabilities."""

    def __init__(self, seed=None):
        self.rng = random.Random(seed)

    def choose(self, events: Sequence) -> int:
        if len(events) == 1:
            return 0
        r = self.rng.random()
        acc = 0.0
        for i, e in enumerate(events):
            acc += e.prob
            if r < acc:
                return i
        return len(events) - 1


class ReplayChooser:
    """Follows a fixed sequence of alternative indices (one per branching point)."""

    def __init__(self, choices: Sequence[int]):
        self.choices = list(choices)
        self.pos = 0

    def choose(self, events: Sequence) -> int:
        if len(events) == 1:
            return 0
        i = self.choices[self.pos]
        self.pos += 1
        return i


FINAL = "final"


def step(state, program: Program, strategy: ExecutionStrategy, registry: SwitchRegistry, chooser):
    """Apply one strategy-designated transition.

    Returns ``(state', event)``, :data:`FINAL` for a final state, or
    :data:`FAILED` when given the failed state.
    """
    if state is FAILED:
        return FAILED
    alts = transitions(state, program, strategy, registry)
    if not alts:
        return FINAL
    event, new = alts[chooser.choose([e for e, _ in alts])]
    return new, event


@dataclass
class SampleResult:
    store: object
    trace: list
    choices: list

    @property
    def failed(self) -> bool:
        return self.store is FAILED

    @property
    def probability(self) -> float:
        return math.prod(e.prob for e in self.trace)


def run(
    program: Program,
    query,
    registry: SwitchRegistry,
    chooser,
    strategy: ExecutionStrategy = REFINED,
    max_steps: int = DEFAULT_MAX_STEPS,
    keep_trace: bool = True,
) -> SampleResult:
    state = strategy.initial_state(query)
    trace, choices = [], []
    steps = 0
    while True:
        if state is FAILED:
            return SampleResult(FAILED, trace, choices)
        alts = transitions(state, program, strategy, registry)
        if not alts:
            return SampleResult(state.chr_store(), trace, choices)
        if len(alts) == 1:
            event, state = alts[0]
        else:
            i = chooser.choose([e for e, _ in alts])
            choices.append(i)
            event, state = alts[i]
        if keep_trace:
            trace.append(event)
        steps += 1
        if steps > max_steps:
            raise LimitExceeded("max_steps", max_steps)


def run_sample(
    program: Program,
    query,
    registry: SwitchRegistry | None = None,
    seed=None,
    strategy: ExecutionStrategy = REFINED,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> SampleResult:
    """Random walk from the query to a final state.

    The same seed, program, query and registry give the same result.
    """
    if registry is None:
        registry = SwitchRegistry.for_program(program)
    return run(program, query, registry, RandomChooser(seed), strategy, max_steps)


def format_trace(trace) -> str:
    return "\n".join(e.trace_line() for e in trace)
