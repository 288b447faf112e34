"""Execution states, propagation history and the switch registry."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple

from .errors import InstantiationError, RegistryError
from .rules import Program
from .terms import Constraint, is_ground, match, render_multiset

SUM_TOLERANCE = 1e-9


class IdentifiedConstraint(NamedTuple):
    constraint: Constraint
    id: int

    def __str__(self) -> str:
        return f"{self.constraint}#{self.id}"


class HistoryEntry(NamedTuple):
    rule_id: int
    kept_ids: tuple
    removed_ids: tuple


@dataclass(frozen=True)
class Active:
    """Goal-stack frame: constraint ``id`` is active at occurrence index ``occ``."""

    id: int
    occ: int = 0


@dataclass(frozen=True)
class ExecutionState:
    """The tuple <goal, store, builtins, history>_counter.

    ``goal`` is an immutable linked list ``(top, rest)`` ending in None, so
    pushing and popping share structure between sibling states. Builtin
    stores of ground executions are either consistent or the state is
    :data:`FAILED`, so only the consistent case is represented here.
    ``fresh`` numbers body-local variables and plays no semantic role.
    """

    goal: tuple | None
    store: tuple
    history: frozenset
    counter: int
    fresh: int = 0

    builtin_ok = True

    def goal_items(self) -> list:
        out = []
        node = self.goal
        while node is not None:
            out.append(node[0])
            node = node[1]
        return out

    def chr_store(self) -> tuple:
        return tuple(ic.constraint for ic in self.store)

    def __str__(self) -> str:
        goal = " ".join(str(g) for g in self.goal_items())
        store = " ".join(str(ic) for ic in self.store)
        return f"<[{goal}], {{{store}}}, true, |T|={len(self.history)}>_{self.counter}"


class _Failed:
    builtin_ok = False
    store = ()

    def __repr__(self) -> str:
        return "FAILED"

    __str__ = __repr__

    def __reduce__(self):
        return "FAILED"


FAILED = _Failed()


def push_all(goal, items: Iterable):
    """Push ``items`` so the first one ends up on top."""
    for item in reversed(list(items)):
        goal = (item, goal)
    return goal


def initial_state(query: Iterable[Constraint]) -> ExecutionState:
    return ExecutionState(push_all(None, query), (), frozenset(), 0)


def store_equivalent(s1, s2) -> bool:
    """Equivalence of ground states: equal constraint multisets."""
    if s1 is FAILED or s2 is FAILED:
        return s1 is s2
    return Counter(s1.chr_store()) == Counter(s2.chr_store())


def canonical(store: Iterable[Constraint]) -> str:
    """Order-independent text key of a constraint multiset."""
    return ",".join(sorted(str(c) for c in store))


FAILED_CLASS = "<failed>"


class Distribution(dict):
    """Probability mass over canonical store keys (see :func:`canonical`)."""

    def __missing__(self, key):
        return 0.0

    def total(self) -> float:
        return sum(self.values())

    def of(self, text: str) -> float:
        """Mass of the class written as a query, e.g. ``"c(1),b(2)"``."""
        from .syntax import parse_query

        return self[canonical(parse_query(text))]

    def distance(self, other: "Distribution") -> float:
        keys = set(self) | set(other)
        return max((abs(self[k] - other[k]) for k in keys), default=0.0)

    def format(self, digits: int | None = None) -> str:
        lines = []
        for key in sorted(self):
            mass = self[key]
            value = repr(mass) if digits is None else f"{mass:.{digits}f}"
            lines.append(f"{key or 'true'}\t{value}")
        return "\n".join(lines)


# -- switches ----------------------------------------------------------------


def _check_probs(name, outcomes: tuple, probs) -> tuple:
    probs = tuple(float(p) for p in probs)
    if len(probs) != len(outcomes):
        raise RegistryError(
            f"switch {name} has {len(outcomes)} outcomes but {len(probs)} probabilities were given"
        )
    for p in probs:
        if not 0.0 <= p <= 1.0:
            raise RegistryError(f"switch {name}: probability {p} outside [0, 1]")
    total = sum(probs)
    if abs(total - 1.0) > SUM_TOLERANCE:
        raise RegistryError(f"switch {name}: probabilities sum to {total!r}, not 1")
    return probs


def format_outcome(v) -> str:
    return str(v)


class SwitchRegistry:
    """Named experiments (switches) with their outcome spaces and distributions.

    Rule switches have outcomes ``(apply, skip)``; disjunction switches have
    outcomes ``1..k``. Unknown switches get a uniform distribution when first
    looked up.
    """

    def __init__(self, sites: Iterable | None = None):
        self._entries: dict = {}
        self._sites = list(sites or ())

    @classmethod
    def for_program(cls, program: Program) -> "SwitchRegistry":
        reg = cls(program.sites())
        for name, outcomes in program.sites():
            if is_ground(name):
                reg.lookup_or_default(name, outcomes)
        for decl in program.declared_switches:
            reg.set_switch(decl.name, decl.probs)
        return reg

    def copy(self) -> "SwitchRegistry":
        other = SwitchRegistry(self._sites)
        other._entries = dict(self._entries)
        return other

    def __contains__(self, name) -> bool:
        return name in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator:
        return iter(sorted(self._entries, key=str))

    def __eq__(self, other) -> bool:
        return isinstance(other, SwitchRegistry) and self._entries == other._entries

    def __getitem__(self, name) -> tuple:
        return self._entries[name]

    def items(self):
        return [(name, self._entries[name]) for name in self]

    def probability(self, name, outcome) -> float:
        outcomes, probs = self._entries[name]
        return probs[outcomes.index(outcome)]

    def lookup_or_default(self, name, outcomes) -> tuple:
        entry = self._entries.get(name)
        if entry is not None:
            if entry[0] != tuple(outcomes):
                raise RegistryError(
                    f"switch {name} used with outcomes {tuple(outcomes)} "
                    f"but registered with {entry[0]}"
                )
            return entry
        if not is_ground(name):
            raise InstantiationError(f"experiment name {name} is not ground")
        outcomes = tuple(outcomes)
        entry = (outcomes, tuple(1.0 / len(outcomes) for _ in outcomes))
        self._entries[name] = entry
        return entry

    def outcomes_for(self, name) -> tuple:
        if name in self._entries:
            return self._entries[name][0]
        for pattern, outcomes in self._sites:
            if match(pattern, name, {}) is not None:
                return tuple(outcomes)
        raise RegistryError(f"unknown switch {name}: no experiment in the program matches it")

    def set_switch(self, name, probs, outcomes=None) -> "SwitchRegistry":
        if not is_ground(name):
            raise InstantiationError(f"experiment name {name} is not ground")
        if outcomes is None:
            outcomes = self.outcomes_for(name)
        outcomes = tuple(outcomes)
        self._entries[name] = (outcomes, _check_probs(name, outcomes, probs))
        return self

    def show_sw(self) -> str:
        lines = []
        for name, (outcomes, probs) in self.items():
            cells = " ".join(f"{format_outcome(v)} (p: {p:.5f})" for v, p in zip(outcomes, probs))
            lines.append(f"Switch {name}: {cells}")
        return "\n".join(lines)

    def __repr__(self) -> str:
        return f"SwitchRegistry({len(self)} switches)"


def store_text(store) -> str:
    if store is FAILED:
        return "fail"
    return render_multiset(store)
