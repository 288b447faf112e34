"""Abstract syntax of chance-rule programs and observations, plus printing."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Union

from .terms import (
    COMPARE_OPS,
    Compound,
    Cond,
    Constraint,
    Term,
    term_vars,
)

RULE_OUTCOMES = ("apply", "skip")


@dataclass(frozen=True)
class Const:
    p: float


@dataclass(frozen=True)
class Eval:
    expr: Term


@dataclass(frozen=True)
class Experiment:
    name: Term


ProbExpr = Union[Const, Eval, Experiment]


@dataclass(frozen=True)
class Builtin:
    """A host-language test or binding: comparison, ``is``, ``=``, ``true``, ``fail``."""

    goal: Term


@dataclass(frozen=True)
class IfThenElse:
    cond: tuple
    then: tuple
    otherwise: tuple


@dataclass(frozen=True)
class Disjunction:
    """Probabilistic disjunction.

    Exactly one of ``weights`` (fixed inline distribution) and ``selector``
    (named experiment) is set. ``site`` names the syntactic position, e.g.
    ``"r2.d1"`` for the first disjunction of rule 2.
    """

    branches: tuple
    site: str
    weights: tuple | None = None
    selector: Experiment | None = None

    def outcomes(self) -> tuple:
        return tuple(range(1, len(self.branches) + 1))


BodyItem = Union[Constraint, Builtin, IfThenElse, Disjunction]
Goal = Union[Builtin, IfThenElse]


@dataclass(frozen=True)
class ChanceRule:
    rule_id: int
    prob: ProbExpr
    kept: tuple
    removed: tuple
    guard: tuple = ()
    body: tuple = ()

    @property
    def heads(self) -> tuple:
        return self.kept + self.removed

    @property
    def is_simplification(self) -> bool:
        return not self.kept

    @property
    def is_propagation(self) -> bool:
        return not self.removed

    def __str__(self) -> str:
        return format_rule(self)


@dataclass(frozen=True)
class SwitchDecl:
    name: Term
    probs: tuple


@dataclass(frozen=True)
class Program:
    rules: tuple
    declared_switches: tuple = ()

    def sites(self) -> list:
        """All experiment-name patterns with their outcome spaces, in rule order."""
        out = []
        for rule in self.rules:
            if isinstance(rule.prob, Experiment):
                out.append((rule.prob.name, RULE_OUTCOMES))
            for d in iter_disjunctions(rule.body):
                if d.selector is not None:
                    out.append((d.selector.name, d.outcomes()))
        return out

    def __str__(self) -> str:
        return format_program(self)


@dataclass(frozen=True)
class Observation:
    """``Q <==> A`` (full) or ``Q ===> A, ~N...`` (partial), seen ``count`` times.

    ``negated`` holds groups of constraints; each ``~c`` literal is its own
    singleton group and ``~(c1,c2)`` forms a group of two.
    """

    query: tuple
    kind: str
    answer: tuple
    negated: tuple = ()
    count: int = 1

    @property
    def is_full(self) -> bool:
        return self.kind == "full"

    def without_count(self) -> "Observation":
        return replace(self, count=1)

    def __str__(self) -> str:
        return format_observation(self)


# -- traversal -------------------------------------------------------------


def iter_disjunctions(items):
    for item in items:
        if isinstance(item, Disjunction):
            yield item
            for branch in item.branches:
                yield from iter_disjunctions(branch)


def map_body(items: tuple, fn: Callable) -> tuple:
    """Rebuild a body bottom-up, calling ``fn`` on every item (returns a tuple)."""
    out = []
    for item in items:
        if isinstance(item, Disjunction):
            item = replace(item, branches=tuple(map_body(b, fn) for b in item.branches))
        out.extend(fn(item))
    return tuple(out)


def goal_vars(goal) -> set:
    if isinstance(goal, Builtin):
        return term_vars(goal.goal)
    if isinstance(goal, IfThenElse):
        out = set()
        for g in goal.cond + goal.then + goal.otherwise:
            out |= goal_vars(g)
        return out
    return set()


def prob_vars(prob: ProbExpr) -> set:
    if isinstance(prob, Eval):
        return term_vars(prob.expr)
    if isinstance(prob, Experiment):
        return term_vars(prob.name)
    return set()


def rule_vars(rule: ChanceRule) -> set:
    out = prob_vars(rule.prob)
    for h in rule.heads:
        out |= term_vars(h)
    for g in rule.guard:
        out |= goal_vars(g)
    out |= body_vars(rule.body)
    return out


def body_vars(items) -> set:
    out = set()
    for item in items:
        if isinstance(item, Constraint):
            out |= term_vars(item)
        elif isinstance(item, Disjunction):
            if item.selector is not None:
                out |= term_vars(item.selector.name)
            for b in item.branches:
                out |= body_vars(b)
        else:
            out |= goal_vars(item)
    return out


def contains_cond(t) -> bool:
    if isinstance(t, Cond):
        return True
    if isinstance(t, Compound):
        return any(contains_cond(a) for a in t.args)
    return False


# -- printing --------------------------------------------------------------


def format_goal_term(t: Term) -> str:
    if isinstance(t, Compound) and len(t.args) == 2 and t.functor in COMPARE_OPS:
        left, right = t.args
        if t.functor == "is":
            return f"{left} is {right}"
        return f"{left}{t.functor}{right}"
    return str(t)


def format_goal(g) -> str:
    if isinstance(g, Builtin):
        return format_goal_term(g.goal)
    if isinstance(g, IfThenElse):
        cond = ", ".join(format_goal(x) for x in g.cond)
        then = ", ".join(format_goal(x) for x in g.then)
        if not g.otherwise:
            return f"({cond} -> {then})"
        other = ", ".join(format_goal(x) for x in g.otherwise)
        return f"({cond} -> {then} ; {other})"
    raise TypeError(g)


def format_prob(prob: ProbExpr) -> str:
    if isinstance(prob, Const):
        return repr(prob.p)
    if isinstance(prob, Eval):
        return f"eval({prob.expr})"
    return str(prob.name)


def _format_branch(items: tuple) -> str:
    text = format_body(items)
    if len(items) > 1 or isinstance(items[0], Disjunction):
        return f"({text})"
    return text


def format_disjunction(d: Disjunction) -> str:
    if d.weights is not None:
        return " ; ".join(
            f"{_format_branch(b)}:{w!r}" for b, w in zip(d.branches, d.weights)
        )
    alts = " ; ".join(_format_branch(b) for b in d.branches)
    return f"{format_prob(d.selector)} ?? {alts}"


def format_item(item) -> str:
    if isinstance(item, Constraint):
        return str(item)
    if isinstance(item, Disjunction):
        return format_disjunction(item)
    return format_goal(item)


def format_body(items: tuple) -> str:
    if len(items) == 1:
        return format_item(items[0])
    parts = []
    for item in items:
        text = format_item(item)
        if isinstance(item, Disjunction):
            text = f"({text})"
        parts.append(text)
    return ", ".join(parts)


def format_rule(rule: ChanceRule) -> str:
    prefix = "" if rule.prob == Const(1.0) else f"{format_prob(rule.prob)} ?? "
    if rule.is_propagation:
        heads = ", ".join(str(h) for h in rule.kept)
        arrow = "==>"
    elif rule.is_simplification:
        heads = ", ".join(str(h) for h in rule.removed)
        arrow = "<=>"
    else:
        heads = (
            ", ".join(str(h) for h in rule.kept)
            + " \\ "
            + ", ".join(str(h) for h in rule.removed)
        )
        arrow = "<=>"
    guard = ""
    if rule.guard:
        guard = ", ".join(format_goal(g) for g in rule.guard) + " | "
    body = format_body(rule.body) if rule.body else "true"
    return f"{prefix}{heads} {arrow} {guard}{body}."


def format_program(program: Program) -> str:
    lines = [format_rule(r) for r in program.rules]
    for decl in program.declared_switches:
        probs = ",".join(repr(p) for p in decl.probs)
        lines.append(f":- set_sw({decl.name}, [{probs}]).")
    return "\n".join(lines) + "\n"


def format_observation(obs: Observation, spaced: bool = True) -> str:
    arrow = "<==>" if obs.is_full else "===>"
    query = ",".join(str(c) for c in obs.query)
    parts = [str(c) for c in obs.answer]
    for group in obs.negated:
        if len(group) == 1:
            parts.append(f"~{group[0]}")
        else:
            parts.append("~(" + ",".join(str(c) for c in group) + ")")
    answer = ",".join(parts)
    sep = f" {arrow} " if spaced else arrow
    text = f"{query}{sep}{answer}".rstrip()
    if obs.count != 1:
        text = f"{obs.count} times {text}"
    return text

