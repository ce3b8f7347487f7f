"""Walk through the grid world and the two coordination games.

Shows clamped movement at the boundary, the empirical state distribution of
a small population, and how raw rewards map into [0, 1].
"""

import numpy as np

from mfgsim import (Action, Cluster, GridSpec, TargetAgreement, default_targets,
                    empirical_distribution, env_step_all, reward_normalise,
                    reward_raw, step_dynamics)

grid = GridSpec(8, 8)
print(f"grid: {grid.width}x{grid.height}, {grid.n_states} states, "
      f"diagonal {grid.diagonal:.3f}")

# movement is deterministic; illegal moves clamp in place
corner = grid.to_state(0, 0)
print("West from the corner stays put:", step_dynamics(corner, Action.WEST, grid) == corner)
print("South from the corner:", grid.to_xy(step_dynamics(corner, Action.SOUTH, grid)))

# a small population and its empirical distribution
states = np.array([0, 0, 0, 9, 9, 60])
mu = empirical_distribution(states, grid.n_states)
print("\noccupied cells:", {int(s): round(float(mu.vector[s]), 3) for s in set(states.tolist())})

# cluster game: reward grows with the fraction of co-located agents
for s in (0, 9, 60):
    raw = reward_raw(int(s), mu, Cluster())
    print(f"cluster reward at state {s}: raw {raw:.3f} -> "
          f"normalised {reward_normalise(raw, Cluster(), mu.n_agents):.3f}")

# target agreement: gathering only pays at a target, and only together
game = TargetAgreement(default_targets(grid))
print("\ntargets (grid corners):", game.targets)
for s in (0, 9):
    raw = reward_raw(int(s), mu, game)
    print(f"target-agreement reward at state {s}: raw {raw:+.3f} -> "
          f"normalised {reward_normalise(raw, game, mu.n_agents):.3f}")

# one synchronous step of the whole population
actions = np.array([Action.EAST, Action.STAY, Action.SOUTH, Action.STAY,
                    Action.STAY, Action.NORTH])
result = env_step_all(states, actions, Cluster(), grid)
print("\nafter one step:", result.next_states.tolist())
print("rewards were evaluated at the pre-move states:", np.round(result.rewards, 3).tolist())
