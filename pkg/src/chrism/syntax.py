"""Lexing and parsing of programs, queries and observations.

The surface syntax is the Prolog-flavoured notation used for chance rules::

    P ?? Hk \\ Hr <=> G | B.
    P ?? H ==> G | B.

Bodies may contain LPAD-style disjunctions ``D1:P1 ; ... ; Dn:Pn`` and
experiment-driven disjunctions ``E ?? D1 ; ... ; Dn``. Guards and builtin body
goals are restricted to arithmetic comparison, ``is``, ``=``/``==``/``\\==``,
``true``, ``fail`` and if-then-else.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace

from .errors import ParseError, ValidationError
from .rules import (
    Builtin,
    ChanceRule,
    Const,
    Disjunction,
    Eval,
    Experiment,
    IfThenElse,
    Observation,
    Program,
    SwitchDecl,
    contains_cond,
    map_body,
    rule_vars,
)
from .terms import (
    COMPARE_OPS,
    Atom,
    Compound,
    Cond,
    Constraint,
    Float,
    Int,
    Var,
    comma_term,
    constraint_from_term,
    is_ground,
    term_vars,
)

SUM_TOLERANCE = 1e-9

_OPERATORS = [
    "<==>", "===>", "<=>", "==>", "=:=", "=\\=", "\\==", ":-", "??", "->",
    "==", "=<", ">=", "//", "=", "<", ">", "\\", "|", ";", ":", ",",
    "(", ")", "[", "]", "+", "-", "*", "/", "~", "\u223c",
]

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|%[^\n]*|/\*.*?\*/)
  | (?P<float>\d+\.\d+(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+)
  | (?P<int>\d+)
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<atom>[a-z][A-Za-z0-9_]*)
  | (?P<qatom>'(?:[^'\\]|\\.)*')
  | (?P<end>\.(?=\s|%|\Z))
  | (?P<op>"""
    + "|".join(re.escape(op) for op in _OPERATORS)
    + r""")
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int
    ws_before: bool

    def is_op(self, *ops: str) -> bool:
        return self.kind == "op" and self.text in ops


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line, line_start = 1, 0
    ws = True
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind == "ws":
            ws = True
        else:
            if kind == "qatom":
                kind = "atom"
                chunk = re.sub(r"\\(.)", r"\1", chunk[1:-1])
            elif chunk == "\u223c":
                chunk = "~"
            tokens.append(Token(kind, chunk, line, pos - line_start + 1, ws))
            ws = False
        newlines = m.group().count("\n")
        if newlines:
            line += newlines
            line_start = m.start() + m.group().rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1, True))
    return tokens


class _Parser:
    """Recursive descent over token index ranges ``[lo, hi)``."""

    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.closers = self._match_brackets()

    def _match_brackets(self) -> dict[int, int]:
        stack: list[int] = []
        closers: dict[int, int] = {}
        pairs = {")": "(", "]": "["}
        for i, tok in enumerate(self.toks):
            if tok.is_op("(", "["):
                stack.append(i)
            elif tok.is_op(")", "]"):
                if not stack or self.toks[stack[-1]].text != pairs[tok.text]:
                    self.error(f"unbalanced {tok.text!r}", i)
                closers[stack.pop()] = i
        if stack:
            self.error("unclosed bracket", stack[-1])
        return closers

    def error(self, message: str, i: int):
        tok = self.toks[min(i, len(self.toks) - 1)]
        raise ParseError(message, tok.line, tok.col)

    # -- depth-0 scanning

    def _top_indices(self, lo: int, hi: int, ops: tuple) -> list[int]:
        out = []
        i = lo
        while i < hi:
            tok = self.toks[i]
            if tok.is_op("(", "["):
                i = self.closers[i] + 1
                continue
            if tok.kind == "op" and tok.text in ops:
                out.append(i)
            i += 1
        return out

    def find_top(self, lo: int, hi: int, *ops: str) -> int:
        found = self._top_indices(lo, hi, ops)
        return found[0] if found else -1

    def split_top(self, lo: int, hi: int, op: str) -> list[tuple[int, int]]:
        bounds = []
        start = lo
        for i in self._top_indices(lo, hi, (op,)):
            bounds.append((start, i))
            start = i + 1
        bounds.append((start, hi))
        return bounds

    def nonempty(self, lo: int, hi: int, what: str):
        if lo >= hi:
            self.error(f"expected {what}", lo)

    def wrapped(self, lo: int, hi: int) -> bool:
        return self.toks[lo].is_op("(") and self.closers[lo] == hi - 1

    # -- terms

    def term(self, lo: int, hi: int, allow_cond: bool = False):
        """Parse exactly ``[lo, hi)`` as a single (goal-level) term."""
        self.nonempty(lo, hi, "a term")
        pos, t = self._goal(lo, hi, allow_cond)
        if pos != hi:
            self.error(f"unexpected {self.toks[pos].text!r}", pos)
        return t

    def _goal(self, pos: int, hi: int, allow_cond: bool):
        pos, left = self._additive(pos, hi, allow_cond)
        if pos < hi:
            tok = self.toks[pos]
            if (tok.kind == "op" and tok.text in COMPARE_OPS) or (
                tok.kind == "atom" and tok.text == "is"
            ):
                pos, right = self._additive(pos + 1, hi, allow_cond)
                return pos, Compound(tok.text, (left, right))
        return pos, left

    def _additive(self, pos: int, hi: int, allow_cond: bool):
        pos, left = self._multiplicative(pos, hi, allow_cond)
        while pos < hi and self.toks[pos].is_op("+", "-"):
            op = self.toks[pos].text
            pos, right = self._multiplicative(pos + 1, hi, allow_cond)
            left = Compound(op, (left, right))
        return pos, left

    def _multiplicative(self, pos: int, hi: int, allow_cond: bool):
        pos, left = self._unary(pos, hi, allow_cond)
        while pos < hi:
            tok = self.toks[pos]
            if not (tok.is_op("*", "/", "//") or (tok.kind == "atom" and tok.text == "mod")):
                break
            pos, right = self._unary(pos + 1, hi, allow_cond)
            left = Compound(tok.text, (left, right))
        return pos, left

    def _unary(self, pos: int, hi: int, allow_cond: bool):
        if pos < hi and self.toks[pos].is_op("-"):
            pos, operand = self._unary(pos + 1, hi, allow_cond)
            if isinstance(operand, Int):
                return pos, Int(-operand.value)
            if isinstance(operand, Float):
                return pos, Float(-operand.value)
            return pos, Compound("-", (operand,))
        return self._primary(pos, hi, allow_cond)

    def _primary(self, pos: int, hi: int, allow_cond: bool):
        if pos >= hi:
            self.error("unexpected end of term", pos)
        tok = self.toks[pos]
        if tok.kind == "int":
            return pos + 1, Int(int(tok.text))
        if tok.kind == "float":
            return pos + 1, Float(float(tok.text))
        if tok.kind == "var":
            if tok.text == "_":
                return pos + 1, Var(f"_G{tok.line}_{tok.col}")
            return pos + 1, Var(tok.text)
        if tok.kind == "atom":
            nxt = pos + 1
            if nxt < hi and self.toks[nxt].is_op("(") and not self.toks[nxt].ws_before:
                close = self.closers[nxt]
                if close >= hi:
                    self.error("unbalanced parenthesis", nxt)
                args = tuple(
                    self.term(a, b, allow_cond) for a, b in self.split_top(nxt + 1, close, ",")
                )
                return close + 1, Compound(tok.text, args)
            if (
                allow_cond
                and tok.text == "cond"
                and nxt < hi
                and not self.toks[nxt].is_op(",", ")")
            ):
                pos, goal = self._goal(nxt, hi, False)
                return pos, Cond(goal)
            return nxt, Atom(tok.text)
        if tok.is_op("("):
            close = self.closers[pos]
            if close >= hi:
                self.error("unbalanced parenthesis", pos)
            items = [self.term(a, b, allow_cond) for a, b in self.split_top(pos + 1, close, ",")]
            return close + 1, comma_term(items)
        if tok.is_op("["):
            close = self.closers[pos]
            if close == pos + 1:
                return close + 1, Compound("[]", ())
            items = [self.term(a, b, allow_cond) for a, b in self.split_top(pos + 1, close, ",")]
            return close + 1, Compound("[]", tuple(items))
        self.error(f"unexpected {tok.text!r}", pos)

    def constraint(self, lo: int, hi: int, ground: bool = False) -> Constraint:
        t = self.term(lo, hi)
        if not isinstance(t, (Atom, Compound)) or (
            isinstance(t, Compound) and (t.functor in COMPARE_OPS or t.functor in (",", "[]"))
        ):
            self.error("expected a constraint", lo)
        c = constraint_from_term(t)
        if ground and not is_ground(c):
            self.error(f"constraint {c} is not ground", lo)
        return c

    def constraint_list(self, lo: int, hi: int, ground: bool = False) -> tuple:
        if lo >= hi:
            return ()
        return tuple(self.constraint(a, b, ground) for a, b in self.split_top(lo, hi, ","))

    # -- goals and bodies

    def goals(self, lo: int, hi: int) -> tuple:
        self.nonempty(lo, hi, "a goal")
        out = []
        for a, b in self.split_top(lo, hi, ","):
            self.nonempty(a, b, "a goal")
            if self.wrapped(a, b):
                if self.find_top(a + 1, b - 1, "->") >= 0:
                    out.append(self.if_then_else(a + 1, b - 1))
                else:
                    out.extend(self.goals(a + 1, b - 1))
                continue
            goal = self.builtin(a, b)
            if goal is None:
                self.error("only builtin tests are allowed here", a)
            out.append(goal)
        return tuple(out)

    def if_then_else(self, lo: int, hi: int) -> IfThenElse:
        arrow = self.find_top(lo, hi, "->")
        semi = self.find_top(arrow + 1, hi, ";")
        cond = self.goals(lo, arrow)
        if semi < 0:
            return IfThenElse(cond, self.goals(arrow + 1, hi), ())
        then = self.goals(arrow + 1, semi)
        if self.find_top(semi + 1, hi, "->") >= 0:
            otherwise = (self.if_then_else(semi + 1, hi),)
        else:
            otherwise = self.goals(semi + 1, hi)
        return IfThenElse(cond, then, otherwise)

    def builtin(self, lo: int, hi: int) -> Builtin | None:
        t = self.term(lo, hi)
        if isinstance(t, Compound) and t.functor in COMPARE_OPS and len(t.args) == 2:
            return Builtin(t)
        if t in (Atom("true"), Atom("fail")):
            return Builtin(t)
        return None


class _RuleParser(_Parser):
    def __init__(self, tokens: list[Token]):
        super().__init__(tokens)
        self.rule_id = 0
        self.n_disj = 0
        self.n_anon = 0

    def begin_rule(self, rule_id: int):
        self.rule_id = rule_id
        self.n_disj = 0
        self.n_anon = 0

    def anonymous(self) -> Experiment:
        self.n_anon += 1
        return Experiment(Atom(f"\0anon{self.n_anon}"))

    def prob_expr(self, lo: int, hi: int):
        if lo == hi:
            return self.anonymous()
        if self.find_top(lo, hi, ",") >= 0:
            parts = [self.term(a, b, allow_cond=True) for a, b in self.split_top(lo, hi, ",")]
            return Experiment(comma_term(parts))
        t = self.term(lo, hi, allow_cond=True)
        if isinstance(t, (Int, Float)):
            p = float(t.value)
            if not 0.0 <= p <= 1.0:
                self.error(f"rule probability {p} outside [0, 1]", lo)
            return Const(p)
        if isinstance(t, Compound) and t.functor == "eval" and len(t.args) == 1:
            return Eval(t.args[0])
        if isinstance(t, Compound) and t.functor in COMPARE_OPS:
            self.error("a comparison is not a probability expression", lo)
        return Experiment(t)

    def body(self, lo: int, hi: int) -> tuple:
        self.nonempty(lo, hi, "a rule body")
        q = self.find_top(lo, hi, "??")
        if q >= 0:
            self.n_disj += 1
            site = f"r{self.rule_id}.d{self.n_disj}"
            selector = self.anonymous() if q == lo else self.prob_expr(lo, q)
            if not isinstance(selector, Experiment):
                self.error("a disjunction selector must be an experiment name", lo)
            branches = tuple(self.conj(a, b) for a, b in self.split_top(q + 1, hi, ";"))
            if len(branches) < 2:
                self.error("a probabilistic disjunction needs at least two branches", q)
            return (Disjunction(branches, site, selector=selector),)
        alts = self.split_top(lo, hi, ";")
        if len(alts) == 1:
            return self.conj(lo, hi)
        self.n_disj += 1
        site = f"r{self.rule_id}.d{self.n_disj}"
        branches, weights = [], []
        for a, b in alts:
            colons = self._top_indices(a, b, (":",))
            if not colons:
                self.error("a disjunct needs a probability (D:P)", a)
            c = colons[-1]
            w = self.term(c + 1, b)
            if not isinstance(w, (Int, Float)):
                self.error("a disjunct probability must be a number", c + 1)
            if not 0.0 <= w.value <= 1.0:
                self.error(f"disjunct probability {w.value} outside [0, 1]", c + 1)
            branches.append(self.conj(a, c))
            weights.append(float(w.value))
        total = sum(weights)
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise ValidationError(
                f"rule {self.rule_id}: disjunction probabilities sum to {total:g}, not 1"
            )
        return (Disjunction(tuple(branches), site, weights=tuple(weights)),)

    def conj(self, lo: int, hi: int) -> tuple:
        self.nonempty(lo, hi, "a body")
        out = []
        for a, b in self.split_top(lo, hi, ","):
            out.extend(self.item(a, b))
        return tuple(out)

    def item(self, lo: int, hi: int) -> tuple:
        self.nonempty(lo, hi, "a body item")
        if self.wrapped(lo, hi):
            if self.find_top(lo + 1, hi - 1, "->") >= 0:
                return (self.if_then_else(lo + 1, hi - 1),)
            return self.body(lo + 1, hi - 1)
        goal = self.builtin(lo, hi)
        if goal is not None:
            return (goal,)
        return (self.constraint(lo, hi),)

    def rule(self, lo: int, hi: int) -> ChanceRule:
        arrow = self.find_top(lo, hi, "<=>", "==>")
        if arrow < 0:
            self.error("expected '<=>' or '==>'", lo)
        q = self.find_top(lo, arrow, "??")
        if q >= 0:
            prob = self.prob_expr(lo, q)
            head_lo = q + 1
        else:
            prob, head_lo = Const(1.0), lo
        self.nonempty(head_lo, arrow, "rule heads")
        backslash = self.find_top(head_lo, arrow, "\\")
        if self.toks[arrow].text == "==>":
            if backslash >= 0:
                self.error("a propagation rule cannot have removed heads", backslash)
            kept, removed = self.constraint_list(head_lo, arrow), ()
        elif backslash >= 0:
            self.nonempty(head_lo, backslash, "kept heads")
            self.nonempty(backslash + 1, arrow, "removed heads")
            kept = self.constraint_list(head_lo, backslash)
            removed = self.constraint_list(backslash + 1, arrow)
        else:
            kept, removed = (), self.constraint_list(head_lo, arrow)
        bar = self.find_top(arrow + 1, hi, "|")
        guard = self.goals(arrow + 1, bar) if bar >= 0 else ()
        body = self.body(bar + 1 if bar >= 0 else arrow + 1, hi)
        return ChanceRule(self.rule_id, prob, kept, removed, guard, body)

    def directive(self, lo: int, hi: int):
        t = self.term(lo, hi)
        if not (isinstance(t, Compound) and t.functor == "set_sw" and len(t.args) == 2):
            self.error("only ':- set_sw(Name, [P1,...,Pn])' directives are supported", lo)
        name, probs = t.args
        if not is_ground(name):
            self.error("set_sw needs a ground switch name", lo)
        if not (isinstance(probs, Compound) and probs.functor == "[]"):
            self.error("set_sw needs a list of probabilities", lo)
        values = []
        for p in probs.args:
            if not isinstance(p, (Int, Float)):
                self.error("set_sw probabilities must be numbers", lo)
            values.append(float(p.value))
        return SwitchDecl(name, tuple(values))


# -- public API -------------------------------------------------------------


def parse_program(text: str) -> Program:
    """Parse, desugar and validate a program."""
    tokens = tokenize(text)
    parser = _RuleParser(tokens)
    rules: list[ChanceRule] = []
    decls: list[SwitchDecl] = []
    i = 0
    while tokens[i].kind != "eof":
        end = i
        while tokens[end].kind not in ("end", "eof"):
            end += 1
        if tokens[end].kind == "eof":
            parser.error("missing '.' at end of clause", end)
        if tokens[i].is_op(":-"):
            decls.append(parser.directive(i + 1, end))
        else:
            parser.begin_rule(len(rules) + 1)
            rule = parser.rule(i, end)
            rule = _name_anonymous(rule, parser.n_anon)
            rules.append(desugar_cond(rule))
        i = end + 1
    program = Program(tuple(rules), tuple(decls))
    validate_program(program)
    if decls:
        # rejects declarations for unknown switches or with bad distributions
        from .runtime import SwitchRegistry

        SwitchRegistry.for_program(program)
    return program


def _name_anonymous(rule: ChanceRule, count: int) -> ChanceRule:
    if count == 0:
        return rule

    def rename(exp: Experiment) -> Experiment:
        name = exp.name
        if isinstance(name, Atom) and name.name.startswith("\0anon"):
            j = int(name.name[5:])
            label = f"rule_{rule.rule_id}" if count == 1 else f"rule_{rule.rule_id}_{j}"
            return Experiment(Atom(label))
        return exp

    return _map_experiments(rule, rename)


def _map_experiments(rule: ChanceRule, fn) -> ChanceRule:
    prob = fn(rule.prob) if isinstance(rule.prob, Experiment) else rule.prob

    def visit(item):
        if isinstance(item, Disjunction) and item.selector is not None:
            return (replace(item, selector=fn(item.selector)),)
        return (item,)

    return replace(rule, prob=prob, body=map_body(rule.body, visit))


def desugar_cond(rule: ChanceRule) -> ChanceRule:
    """Replace ``cond C`` arguments of experiment names by fresh variables.

    Each condition becomes an if-then-else binding the fresh variable to
    ``yes`` or ``no``. For the rule's own probability the binding is appended
    to the guard; for a body disjunction it is placed right before it.
    """
    used = rule_vars(rule)
    counter = [0]

    def fresh() -> Var:
        while True:
            counter[0] += 1
            name = f"_Cond{counter[0]}"
            if name not in used:
                return Var(name)

    def strip(t, bindings: list):
        if isinstance(t, Cond):
            v = fresh()
            bindings.append(
                IfThenElse(
                    (Builtin(t.goal),),
                    (Builtin(Compound("=", (v, Atom("yes")))),),
                    (Builtin(Compound("=", (v, Atom("no")))),),
                )
            )
            return v
        if isinstance(t, Compound):
            return Compound(t.functor, tuple(strip(a, bindings) for a in t.args))
        return t

    guard = rule.guard
    prob = rule.prob
    if isinstance(prob, Experiment) and contains_cond(prob.name):
        extra: list = []
        prob = Experiment(strip(prob.name, extra))
        guard = guard + tuple(extra)

    def visit(item):
        if (
            isinstance(item, Disjunction)
            and item.selector is not None
            and contains_cond(item.selector.name)
        ):
            extra: list = []
            selector = Experiment(strip(item.selector.name, extra))
            return tuple(extra) + (replace(item, selector=selector),)
        return (item,)

    body = map_body(rule.body, visit)
    if prob is rule.prob and guard is rule.guard and body == rule.body:
        return rule
    return replace(rule, prob=prob, guard=guard, body=body)


def _binds(goal, bound: set) -> set:
    """Variables bound after running ``goal`` with ``bound`` already bound."""
    if isinstance(goal, IfThenElse):
        after_cond = bound
        for g in goal.cond:
            after_cond = _binds(g, after_cond)
        then = after_cond
        for g in goal.then:
            then = _binds(g, then)
        other = bound
        for g in goal.otherwise:
            other = _binds(g, other)
        return then & other if goal.otherwise else then
    t = goal.goal
    if isinstance(t, Compound) and t.functor == "is":
        target, expr = t.args
        if not term_vars(expr) <= bound:
            raise ValidationError(f"unbound variable in arithmetic: {t}")
        return bound | term_vars(target)
    if isinstance(t, Compound) and t.functor == "=":
        left, right = (term_vars(a) for a in t.args)
        if left <= bound or right <= bound:
            return bound | left | right
        raise ValidationError(f"both sides of {t} are unbound")
    if not term_vars(t) <= bound:
        missing = ", ".join(sorted(term_vars(t) - bound))
        raise ValidationError(f"unbound variable(s) {missing} in test {t}")
    return bound


def _check_body(items, bound: set, where: str) -> set:
    for item in items:
        if isinstance(item, Constraint):
            missing = term_vars(item) - bound
            if missing:
                raise ValidationError(
                    f"{where}: body constraint {item} would be non-ground "
                    f"(unbound {', '.join(sorted(missing))})"
                )
        elif isinstance(item, Disjunction):
            if item.selector is not None:
                missing = term_vars(item.selector.name) - bound
                if missing:
                    raise ValidationError(f"{where}: unbound variable(s) in experiment name")
            results = [_check_body(b, set(bound), where) for b in item.branches]
            bound = set.intersection(*results)
        else:
            bound = _binds(item, bound)
    return bound


def validate_program(program: Program) -> None:
    for rule in program.rules:
        where = f"rule {rule.rule_id}"
        if not rule.heads:
            raise ValidationError(f"{where}: no heads")
        bound: set = set()
        for h in rule.heads:
            bound |= term_vars(h)
        for g in rule.guard:
            bound = _binds(g, bound)
        missing = (
            term_vars(rule.prob.name) if isinstance(rule.prob, Experiment) else set()
        ) | (term_vars(rule.prob.expr) if isinstance(rule.prob, Eval) else set())
        missing -= bound
        if missing:
            raise ValidationError(
                f"{where}: probability expression uses unbound {', '.join(sorted(missing))}"
            )
        _check_body(rule.body, bound, where)


def parse_query(text: str) -> tuple:
    """Parse a comma-separated list of ground constraints (duplicates kept)."""
    tokens = tokenize(text)
    hi = len(tokens) - 1
    if hi > 0 and tokens[hi - 1].kind == "end":
        hi -= 1
    parser = _Parser(tokens)
    return parser.constraint_list(0, hi, ground=True)


def _observation_items(parser: _Parser, lo: int, hi: int):
    answer, negated = [], []
    if lo >= hi:
        return (), ()
    if hi - lo == 1 and parser.toks[lo].kind == "atom" and parser.toks[lo].text == "true":
        return (), ()
    for a, b in parser.split_top(lo, hi, ","):
        parser.nonempty(a, b, "a constraint")
        if parser.toks[a].is_op("~"):
            if parser.wrapped(a + 1, b):
                group = parser.constraint_list(a + 2, b - 1, ground=True)
            else:
                group = (parser.constraint(a + 1, b, ground=True),)
            negated.append(group)
        else:
            answer.append(parser.constraint(a, b, ground=True))
    return tuple(answer), tuple(negated)


def parse_observation(text: str) -> Observation:
    """Parse ``[N times] Q <==> A`` / ``Q ===> A, ~N`` or ``count(X, N)``."""
    tokens = tokenize(text)
    parser = _Parser(tokens)
    lo, hi = 0, len(tokens) - 1
    if hi > lo and tokens[hi - 1].kind == "end":
        hi -= 1
    parser.nonempty(lo, hi, "an observation")
    if parser.wrapped(lo, hi):
        lo, hi = lo + 1, hi - 1
    count = 1
    if (
        tokens[lo].kind == "atom"
        and tokens[lo].text == "count"
        and tokens[lo + 1].is_op("(")
        and parser.closers[lo + 1] == hi - 1
    ):
        parts = parser.split_top(lo + 2, hi - 1, ",")
        n = parser.term(*parts[-1])
        if not isinstance(n, Int):
            parser.error("count/2 needs an integer count", parts[-1][0])
        count = n.value
        lo, hi = lo + 2, parts[-1][0] - 1
    elif (
        tokens[lo].kind == "int"
        and tokens[lo + 1].kind == "atom"
        and tokens[lo + 1].text == "times"
    ):
        count = int(tokens[lo].text)
        lo += 2
    if count < 1:
        raise ValidationError(f"observation count must be positive, got {count}")
    if parser.wrapped(lo, hi):
        lo, hi = lo + 1, hi - 1
    arrow = parser.find_top(lo, hi, "<==>", "===>")
    if arrow < 0:
        parser.error("expected '<==>' or '===>'", lo)
    kind = "full" if tokens[arrow].text == "<==>" else "partial"
    query = parser.constraint_list(lo, arrow, ground=True)
    answer, negated = _observation_items(parser, arrow + 1, hi)
    if kind == "full" and negated:
        raise ValidationError("negated constraints are only allowed in partial observations")
    return Observation(query, kind, answer, negated, count)


def parse_observations(text: str) -> list[Observation]:
    """Parse an observation file: one observation per line, ``%`` comments."""
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.split("%", 1)[0].strip()
        if not stripped:
            continue
        try:
            out.append(parse_observation(stripped))
        except ParseError as exc:
            raise ParseError(f"line {lineno}: {exc}") from None
    return out



def parse_term(text: str):
    """Parse a single ground term, e.g. a switch name such as ``choice(jon)``."""
    tokens = tokenize(text)
    parser = _Parser(tokens)
    hi = len(tokens) - 1
    parser.nonempty(0, hi, "a term")
    t = parser.term(0, hi)
    if not is_ground(t):
        raise ValidationError(f"term {t} is not ground")
    return t
