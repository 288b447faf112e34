"""
Strategy dependence
===================

When two rules compete for the same constraint, or one rule can pick
between partners, the rule and partner orders of the execution strategy can
change the answer distribution. ``check_ambiguity`` compares several
strategies and reports the first disagreement it finds.
"""

from chrism import check_ambiguity, distribution, generate_variants, parse_query
from chrism.fixtures import fixture_text, load_program

for name, query, widen in [
    ("ambiguous_two_rule", "a", False),
    ("partner_order", "b(1),b(2),a", False),
    ("partner_order", "a,b(1),b(2)", True),
    ("confluent_ambiguous", "a", False),
    ("rps", "player(tom),player(jon)", False),
]:
    program = load_program(name)
    print(f"--- {name}, query {query}{' (widened)' if widen else ''}")
    print(fixture_text(f"{name}.chrism").strip())
    print(check_ambiguity(program, parse_query(query), k=6, widen=widen).format(4))
    print()

# each variant's full distribution for the three-rule program
program = load_program("confluent_ambiguous")
for variant in generate_variants(program, 6):
    print(f"[{variant.label}]", dict(distribution(program, parse_query("a"), variant)))
