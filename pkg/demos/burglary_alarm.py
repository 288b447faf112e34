"""
The burglary alarm network
==========================

A small Bayesian network written as chance rules. We fix its tables, sample
from it, and then learn the tables back from the samples.
"""

from collections import Counter

from chrism import EMConfig, SwitchRegistry, em_learn, parse_observation, parse_query, parse_term
from chrism import probability, run_sample
from chrism.fixtures import fixture_text, load_program
from chrism.runtime import canonical

program = load_program("alarm")
print(fixture_text("alarm.chrism"))

truth = SwitchRegistry.for_program(program)
tables = {
    "rule_1": [0.1, 0.9],
    "rule_2": [0.2, 0.8],
    "(yes,yes)": [0.95, 0.05],
    "(yes,no)": [0.94, 0.06],
    "(no,yes)": [0.29, 0.71],
    "(no,no)": [0.001, 0.999],
    "yes": [0.9, 0.1],
    "no": [0.05, 0.95],
}
for name, dist in tables.items():
    truth.set_switch(parse_term(name), dist)
print(truth.show_sw())

obs = parse_observation("go ===> johncalls,marycalls")
print("P(both call) =", round(probability(program, obs, registry=truth), 6))

# sample complete worlds and learn the tables back
samples = Counter(
    canonical(run_sample(program, parse_query("go"), truth, seed=s).store) for s in range(5000)
)
data = [(parse_observation(f"go <==> {world}"), n) for world, n in samples.items()]
result = em_learn(program, data, config=EMConfig(seed=1))
print("\nlearned:")
print(result.registry.show_sw())
