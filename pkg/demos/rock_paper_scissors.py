"""
Learning player strategies
==========================

Two players pick rock, scissors or paper from unknown distributions. From
the outcome of 100 games (who won, or a tie) EM estimates the move
distributions. Only win/tie rates are identifiable, so different seeds give
different move probabilities with the same predicted rates.
"""

import numpy as np

from chrism import EMConfig, em_learn, parse_observation, parse_observations, probability
from chrism.fixtures import fixture_text, load_program

program = load_program("rps")
data = parse_observations(fixture_text("rps.obs"))
for obs in data:
    print(obs)

# before learning every switch is uniform
q = "player(tom),player(jon)"
wins = parse_observation(f"{q} ===> winner(tom)")
print("P(tom wins), uniform:", round(probability(program, wins), 6))

for seed in range(3):
    result = em_learn(program, data, config=EMConfig(seed=seed))
    print(f"\nseed {seed}: {result.iterations} iterations, log-likelihood "
          f"{result.final_log_likelihood:.5f}")
    print(result.registry.show_sw())
    rates = [
        probability(program, parse_observation(f"{q} ===> {a}"), registry=result.registry)
        for a in ("winner(tom)", "winner(jon)", "~winner(tom),~winner(jon)")
    ]
    print("predicted tom/jon/tie:", np.round(rates, 4))

# the log-likelihood trace never decreases
lls = np.array(result.log_likelihoods)
print("\nmonotone:", bool(np.all(np.diff(lls) >= -1e-12)))
