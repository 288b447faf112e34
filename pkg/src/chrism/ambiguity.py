"""Refuting unambiguity by comparing answer distributions across strategies.

A program is unambiguous w.r.t. a strategy class when every strategy in the
class gives the same distribution over final-state classes. We cannot check
all strategies, so :func:`check_ambiguity` tries a finite, deterministic set
of variants and either returns a witness or admits it found none.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass

from .engine import ExecutionStrategy
from .inference import Limits, distribution
from .rules import Program
from .runtime import Distribution, SwitchRegistry

# a variant is just a labelled strategy
StrategyVariant = ExecutionStrategy


def _label(order: tuple, partners: str, query_order: str) -> str:
    text = f"rules {','.join(map(str, order))}, {partners} partners"
    if query_order == "reverse":
        text += ", query reversed"
    return text


def _signature(program: Program, order: tuple, partners: str, query_order: str):
    """What actually distinguishes two variants' behaviour on ``program``.

    Only the relative order of occurrences sharing a head predicate matters,
    and partner order only matters for rules with more than one head.
    """
    by_id = {r.rule_id: r for r in program.rules}
    occ: dict = {}
    for rid in order:
        for pos, head in enumerate(by_id[rid].heads):
            occ.setdefault(head.key, []).append((rid, pos))
    multi = any(len(r.heads) > 1 for r in program.rules)
    return (
        tuple(sorted((k, tuple(v)) for k, v in occ.items())),
        partners if multi else "ascending",
        query_order,
    )


def _orders(program: Program, seed: int):
    ids = tuple(r.rule_id for r in program.rules)
    yield ids
    yield ids[::-1]
    if len(ids) <= 6:
        rest = [p for p in itertools.permutations(ids) if p not in (ids, ids[::-1])]
        random.Random(seed).shuffle(rest)
        yield from rest
    else:
        rng = random.Random(seed)
        seen = {ids, ids[::-1]}
        for _ in range(1000):
            p = list(ids)
            rng.shuffle(p)
            p = tuple(p)
            if p not in seen:
                seen.add(p)
                yield p


def generate_variants(program: Program, k: int, seed: int = 0, widen: bool = False) -> list:
    """Up to ``k`` behaviourally distinct strategy variants.

    The list starts with the default refined strategy, then reversed rule
    order, descending partner order and both, followed by seeded rule-order
    permutations. With ``widen`` the initial query is also introduced in
    reverse, which leaves the refined class.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    ids = tuple(r.rule_id for r in program.rules)
    query_orders = ("forward", "reverse") if widen else ("forward",)

    def candidates():
        orders = _orders(program, seed)
        first = [next(orders, ids), next(orders, ids[::-1])]
        for q in query_orders:
            yield first[0], "ascending", q
            yield first[1], "ascending", q
            yield first[0], "descending", q
            yield first[1], "descending", q
        for order in orders:
            for q in query_orders:
                for partners in ("ascending", "descending"):
                    yield order, partners, q

    out, seen = [], set()
    for order, partners, q in candidates():
        sig = _signature(program, order, partners, q)
        if sig in seen:
            continue
        seen.add(sig)
        label = "refined" if (order, partners, q) == (ids, "ascending", "forward") else _label(
            order, partners, q
        )
        out.append(ExecutionStrategy(order, partners, q, label))
        if len(out) == k:
            break
    return out


@dataclass(frozen=True)
class Ambiguous:
    query: tuple
    labels: tuple
    distributions: tuple
    witness_class: str
    difference: float

    def format(self, digits: int = 6) -> str:
        query = ",".join(str(c) for c in self.query)
        lines = [f"Ambiguous for query {query}: strategies differ on class "
                 f"{self.witness_class or 'true'} by {self.difference:.{digits}g}"]
        for label, dist in zip(self.labels, self.distributions):
            lines.append(f"[{label}]")
            lines.append(dist.format(digits))
        return "\n".join(lines)


@dataclass(frozen=True)
class NotRefutedBy:
    """No two of ``k`` variants disagreed. This is not a proof of unambiguity."""

    k: int

    def format(self, digits: int = 6) -> str:
        return f"Not refuted by {self.k} strategy variants"


def _widest_gap(d1: Distribution, d2: Distribution):
    best = ("", 0.0)
    for key in sorted(set(d1) | set(d2)):
        gap = abs(d1[key] - d2[key])
        if gap > best[1]:
            best = (key, gap)
    return best


def check_ambiguity(
    program: Program,
    query,
    k: int = 4,
    tolerance: float = 1e-9,
    seed: int = 0,
    widen: bool = False,
    registry: SwitchRegistry | None = None,
    limits: Limits = Limits(),
):
    """:class:`Ambiguous` with the first disagreeing pair, else :class:`NotRefutedBy`."""
    if registry is None:
        registry = SwitchRegistry.for_program(program)
    query = tuple(query)
    variants = generate_variants(program, k, seed, widen)
    dists = [distribution(program, query, v, registry, limits) for v in variants]
    for i, j in itertools.combinations(range(len(variants)), 2):
        key, gap = _widest_gap(dists[i], dists[j])
        if gap > tolerance:
            return Ambiguous(
                query,
                (variants[i].label, variants[j].label),
                (dists[i], dists[j]),
                key,
                gap,
            )
    return NotRefutedBy(len(variants))
