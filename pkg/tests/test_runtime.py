import pytest
from hypothesis import given
from hypothesis import strategies as st

from chrism import (
    Atom,
    Constraint,
    Distribution,
    InstantiationError,
    RegistryError,
    SwitchRegistry,
    Var,
    canonical,
    parse_program,
    parse_query,
    store_equivalent,
)
from chrism.runtime import FAILED, ExecutionState, IdentifiedConstraint, initial_state
from chrism.terms import Compound


def _state(*items):
    store = tuple(IdentifiedConstraint(c, i) for i, c in enumerate(items))
    return ExecutionState(None, store, frozenset(), len(items))


def test_initial_state():
    s = initial_state(parse_query("a,b(1)"))
    assert [str(g) for g in s.goal_items()] == ["a", "b(1)"]
    assert s.store == () and s.counter == 0 and not s.history


def test_store_equivalence_ignores_ids_and_order():
    a, b = Constraint("a"), Constraint("b")
    s1 = _state(a, b, a)
    s2 = ExecutionState(None, (IdentifiedConstraint(b, 7), IdentifiedConstraint(a, 3),
                               IdentifiedConstraint(a, 9)), frozenset(), 10)
    assert store_equivalent(s1, s2)
    assert not store_equivalent(s1, _state(a, b))
    assert store_equivalent(FAILED, FAILED)
    assert not store_equivalent(FAILED, s1)


@given(st.lists(st.sampled_from(["a", "b(1)", "c(x,2)", "d"]), max_size=6), st.randoms())
def test_canonical_is_order_independent(names, rnd):
    cs = list(parse_query(",".join(names))) if names else []
    shuffled = cs[:]
    rnd.shuffle(shuffled)
    assert canonical(cs) == canonical(shuffled)


def test_distribution_helpers():
    d = Distribution({"b": 0.5, "a,c": 0.5})
    assert d.of("c,a") == 0.5
    assert d["missing"] == 0.0
    assert d.total() == 1.0
    assert d.distance(Distribution({"b": 0.25, "a,c": 0.75})) == 0.25
    assert d.format(3) == "a,c\t0.500\nb\t0.500"


# -- registry --------------------------------------------------------------------

RPS = "player(P) <=> choice(P) ?? rock(P) ; scissors(P) ; paper(P)."


def test_default_is_uniform_and_lazy():
    reg = SwitchRegistry.for_program(parse_program(RPS))
    assert len(reg) == 0
    tom = Compound("choice", (Atom("tom"),))
    outcomes, probs = reg.lookup_or_default(tom, (1, 2, 3))
    assert outcomes == (1, 2, 3)
    assert probs == pytest.approx((1 / 3,) * 3)
    assert tom in reg


def test_set_switch_and_show_sw():
    reg = SwitchRegistry.for_program(parse_program(RPS))
    reg.set_switch(Compound("choice", (Atom("jon"),)), [0.60057, 0.06536, 0.33407])
    reg.set_switch(Compound("choice", (Atom("tom"),)), [0.08420, 0.20973, 0.70607])
    assert reg.show_sw() == (
        "Switch choice(jon): 1 (p: 0.60057) 2 (p: 0.06536) 3 (p: 0.33407)\n"
        "Switch choice(tom): 1 (p: 0.08420) 2 (p: 0.20973) 3 (p: 0.70607)"
    )


def test_rule_switch_outcomes():
    reg = SwitchRegistry.for_program(parse_program("s ?? a <=> b."))
    assert reg[Atom("s")][0] == ("apply", "skip")
    reg.set_switch(Atom("s"), [0.3, 0.7])
    assert reg.probability(Atom("s"), "skip") == 0.7


@pytest.mark.parametrize("probs", [[0.5, 0.3], [0.5, 0.3, 0.2, 0.0], [1.2, -0.2]])
def test_invalid_distributions(probs):
    reg = SwitchRegistry.for_program(parse_program("s ?? a <=> b."))
    with pytest.raises(RegistryError):
        reg.set_switch(Atom("s"), probs)


def test_unknown_switch_and_nonground():
    reg = SwitchRegistry.for_program(parse_program(RPS))
    with pytest.raises(RegistryError):
        reg.set_switch(Atom("nope"), [0.5, 0.5])
    with pytest.raises(InstantiationError):
        reg.set_switch(Compound("choice", (Var("P"),)), [0.2, 0.3, 0.5])


def test_outcome_space_mismatch():
    reg = SwitchRegistry()
    reg.lookup_or_default(Atom("s"), ("apply", "skip"))
    with pytest.raises(RegistryError):
        reg.lookup_or_default(Atom("s"), (1, 2))


def test_copy_is_independent():
    reg = SwitchRegistry.for_program(parse_program("s ?? a <=> b."))
    other = reg.copy()
    other.set_switch(Atom("s"), [0.1, 0.9])
    assert reg != other
    assert reg.probability(Atom("s"), "apply") == 0.5
