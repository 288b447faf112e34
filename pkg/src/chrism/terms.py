"""Terms, constraints, substitution and matching.

Terms follow Prolog conventions: lowercase atoms, capitalized variables,
integers, floats and compound terms. Data handled by the engine is ground;
variables only occur inside rule heads, guards and bodies.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

_PLAIN_ATOM = re.compile(r"[a-z][A-Za-z0-9_]*\Z")

ARITH_OPS = ("+", "-", "*", "/", "//", "mod")
COMPARE_OPS = ("<", ">", "=<", ">=", "=:=", "=\\=", "==", "\\==", "=", "is")


@dataclass(frozen=True)
class Atom:
    name: str

    def __str__(self) -> str:
        return self.name if _PLAIN_ATOM.match(self.name) else quote_atom(self.name)


@dataclass(frozen=True)
class Int:
    value: int

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class Float:
    value: float

    def __str__(self) -> str:
        return repr(self.value)


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Compound:
    functor: str
    args: tuple

    def __str__(self) -> str:
        if self.functor == "[]":
            return "[" + ",".join(str(a) for a in self.args) + "]"
        if self.functor == "," and len(self.args) == 2:
            return "(" + ",".join(str(a) for a in flatten_comma(self)) + ")"
        if self.functor in ARITH_OPS and len(self.args) == 2:
            left, right = (_operand(a) for a in self.args)
            sep = " mod " if self.functor == "mod" else self.functor
            return f"{left}{sep}{right}"
        if self.functor == "-" and len(self.args) == 1:
            return f"-{_operand(self.args[0])}"
        name = str(Atom(self.functor))
        return f"{name}({','.join(str(a) for a in self.args)})"


@dataclass(frozen=True)
class Cond:
    """A ``cond G`` argument inside an experiment name, removed by desugaring."""

    goal: Term

    def __str__(self) -> str:
        return f"cond {self.goal}"


Term = Union[Atom, Int, Float, Var, Compound, Cond]


@dataclass(frozen=True)
class Constraint:
    """A CHRiSM constraint ``functor(args...)``, identified by functor/arity."""

    functor: str
    args: tuple = ()
    key: tuple = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "key", (self.functor, len(self.args)))

    def __str__(self) -> str:
        name = str(Atom(self.functor))
        if not self.args:
            return name
        return f"{name}({','.join(str(a) for a in self.args)})"


def quote_atom(name: str) -> str:
    return "'" + name.replace("\\", "\\\\").replace("'", "\\'") + "'"


def _operand(t: Term) -> str:
    if isinstance(t, Compound) and t.functor in ARITH_OPS:
        return f"({t})"
    if isinstance(t, (Int, Float)) and t.value < 0:
        return f"({t})"
    return str(t)


def flatten_comma(t: Term) -> list:
    out = []
    while isinstance(t, Compound) and t.functor == "," and len(t.args) == 2:
        out.append(t.args[0])
        t = t.args[1]
    out.append(t)
    return out


def comma_term(items: list) -> Term:
    """Right-nested ``','/2`` term for two or more items; the item itself for one."""
    term = items[-1]
    for item in reversed(items[:-1]):
        term = Compound(",", (item, term))
    return term


def term_vars(t) -> set[str]:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, (Compound, Constraint)):
        out: set[str] = set()
        for a in t.args:
            out |= term_vars(a)
        return out
    if isinstance(t, Cond):
        return term_vars(t.goal)
    return set()


def is_ground(t) -> bool:
    if isinstance(t, Var):
        return False
    if isinstance(t, (Compound, Constraint)):
        return all(is_ground(a) for a in t.args)
    if isinstance(t, Cond):
        return False
    return True


def substitute(t, bindings: Mapping[str, Term]):
    """Apply ``bindings`` to a term or constraint, chasing chains of variables."""
    if isinstance(t, Var):
        seen = 0
        while isinstance(t, Var) and t.name in bindings:
            t = bindings[t.name]
            seen += 1
            if seen > len(bindings):
                break
        if isinstance(t, Compound):
            return substitute(t, bindings)
        return t
    if isinstance(t, Compound):
        return Compound(t.functor, tuple(substitute(a, bindings) for a in t.args))
    if isinstance(t, Constraint):
        if not t.args:
            return t
        return Constraint(t.functor, tuple(substitute(a, bindings) for a in t.args))
    if isinstance(t, Cond):
        return Cond(substitute(t.goal, bindings))
    return t


def match(pattern, term, bindings: dict) -> dict | None:
    """One-way matching of ``pattern`` against ground ``term``.

    Returns an extended copy of ``bindings``, or None on mismatch.
    """
    if isinstance(pattern, Constraint):
        if not isinstance(term, Constraint) or pattern.key != term.key:
            return None
        out = bindings
        copied = False
        for p, t in zip(pattern.args, term.args):
            if type(p) is Var:
                # inlined variable case, the hot path of head matching
                bound = out.get(p.name)
                if bound is None:
                    if not copied:
                        out = dict(out)
                        copied = True
                    out[p.name] = t
                elif bound != t:
                    return None
            else:
                out = match(p, t, out)
                if out is None:
                    return None
                copied = False
        return out
    if isinstance(pattern, Var):
        bound = bindings.get(pattern.name)
        if bound is None:
            out = dict(bindings)
            out[pattern.name] = term
            return out
        return bindings if bound == term else None
    if isinstance(pattern, Compound):
        if (
            not isinstance(term, Compound)
            or term.functor != pattern.functor
            or len(term.args) != len(pattern.args)
        ):
            return None
        out = bindings
        for p, t in zip(pattern.args, term.args):
            out = match(p, t, out)
            if out is None:
                return None
        return out
    return bindings if pattern == term else None


def unify(a, b, bindings: dict) -> dict | None:
    """Syntactic unification (no occurs check) under ``bindings``."""
    a = substitute(a, bindings)
    b = substitute(b, bindings)
    if isinstance(a, Var):
        if a == b:
            return bindings
        out = dict(bindings)
        out[a.name] = b
        return out
    if isinstance(b, Var):
        out = dict(bindings)
        out[b.name] = a
        return out
    if isinstance(a, Compound) and isinstance(b, Compound):
        if a.functor != b.functor or len(a.args) != len(b.args):
            return None
        out = bindings
        for x, y in zip(a.args, b.args):
            out = unify(x, y, out)
            if out is None:
                return None
        return out
    return bindings if a == b else None


def constraint_from_term(t: Term) -> Constraint:
    if isinstance(t, Atom):
        return Constraint(t.name, ())
    if isinstance(t, Compound) and t.functor != ",":
        return Constraint(t.functor, t.args)
    raise TypeError(f"not a constraint: {t}")


def constraint_to_term(c: Constraint) -> Term:
    return Compound(c.functor, c.args) if c.args else Atom(c.functor)


def render_multiset(items: Iterable) -> str:
    return ",".join(str(c) for c in items)
