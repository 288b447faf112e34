"""
Random graphs
=============

A propagation rule adds each directed edge with some probability. With the
constant 1/2 every ordered pair of distinct nodes is an independent coin; an
``eval`` probability of 3/(n-1) gives on average 3n edges.
"""

import numpy as np

from chrism import parse_query, run_sample
from chrism.fixtures import load_program

dense = load_program("random_graph_dense")
sparse = load_program("random_graph_sparse")


def edges(program, n, seed, count=False):
    head = [f"nb_nodes({n})"] if count else []
    query = parse_query(",".join(head + [f"node({i})" for i in range(1, n + 1)]))
    return sum(c.functor == "edge" for c in run_sample(program, query, seed=seed).store)


for n in (3, 4, 5):
    sample = np.array([edges(dense, n, s) for s in range(2000)])
    print(f"dense n={n}: mean edges {sample.mean():.3f} (expected {n * (n - 1) / 2})")

for n in (5, 7, 9):
    sample = np.array([edges(sparse, n, s, count=True) for s in range(300)])
    print(f"sparse n={n}: mean edges {sample.mean():.2f} (expected {3 * n})")
