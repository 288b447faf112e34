"""
Coin tossing with chance rules
==============================

A single rule turns every ``toss`` into ``head`` or ``tail``. We sample it,
then ask for exact probabilities of full and partial observations.
"""

from collections import Counter

from chrism import distribution, parse_observation, parse_program, parse_query, probability, run_sample
from chrism.runtime import canonical

program = parse_program("toss <=> head:0.5 ; tail:0.5.")

# a few random runs
for seed in range(5):
    result = run_sample(program, parse_query("toss,toss"), seed=seed)
    print("toss,toss <==>", canonical(result.store))

# empirical frequencies over many seeds
counts = Counter(
    canonical(run_sample(program, parse_query("toss"), seed=s).store) for s in range(10000)
)
print({k: v / 10000 for k, v in sorted(counts.items())})

# exact answers by enumerating the derivation tree
print(distribution(program, parse_query("toss,toss,toss")).format(4))
for text in ["toss,toss <==> head,tail", "toss,toss <==> tail,head", "toss,toss,toss ===> head,head"]:
    print(f"P({text}) = {probability(program, parse_observation(text)):.4f}")
