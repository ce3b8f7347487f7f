"""Policy propagation over broadcast-radius graphs: softmax adoption,
temperature effects, and max-consensus in diameter-many rounds.
"""

import numpy as np

from mfgsim import (CommGraph, GridSpec, build_graph, communication_round,
                    f_of, graph_diameter)

grid = GridSpec(8, 8)
rng = np.random.default_rng(1)

# radius graphs over agent positions
states = rng.integers(0, grid.n_states, size=10)
for radius in (0.2, 0.5, 1.0):
    g = build_graph(states, grid, radius)
    print(f"radius {radius}: {len(g.edges)} edges, diameter {graph_diameter(g)}")

# consensus on a path graph: the best policy needs exactly diameter rounds
n = 6
path = CommGraph.from_pairs(n, [(i, i + 1) for i in range(n - 1)])
d = graph_diameter(path)
policies = [np.eye(n)[[i]] for i in range(n)]   # distinct one-hot tables
sigmas = [float(i) for i in range(n)]           # agent n-1 holds the best
rngs = [np.random.default_rng([7, i]) for i in range(n)]
print(f"\npath graph on {n} agents, diameter {d}; best policy starts at one end")
for round_no in range(1, d + 1):
    policies, sigmas = communication_round(policies, sigmas, path, tau=0.0, rngs=rngs)
    distinct = len({p.tobytes() for p in policies})
    print(f"  after round {round_no}: {distinct} distinct policies")

# the residual-divergence factor from the round-count analysis
print("\nresidual divergence factor (1 - 1/d)^C, d = 5:")
print({C: round(f_of(C, 5), 4) for C in range(0, 6)})

# high temperature makes adoption uniform: policies mix instead of converging
policies = [np.eye(n)[[i]] for i in range(n)]
sigmas = [float(i) for i in range(n)]
complete = CommGraph.from_pairs(n, [(i, j) for i in range(n) for j in range(i + 1, n)])
policies, _ = communication_round(policies, sigmas, complete, tau=1e12, rngs=rngs)
print("\none huge-temperature round on the complete graph adopts at random:",
      sorted(int(np.argmax(p)) for p in policies))
