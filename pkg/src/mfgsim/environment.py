"""Grid-world dynamics and the two coordination games.

Rewards depend on the agent's own state and the population's empirical
distribution only; transitions are deterministic clamped moves and do not
depend on the distribution. Raw rewards are normalised into [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .core import Action, EmpiricalDistribution, GridSpec, empirical_distribution


@dataclass(frozen=True)
class Cluster:
    """Agents earn more the larger the fraction of the population co-located
    with them: raw reward log(mu(s))."""


@dataclass(frozen=True)
class TargetAgreement:
    """Agents earn the co-located population fraction when gathered with
    others at one of the targets, and -1 otherwise."""

    targets: Tuple[int, ...]

    def __post_init__(self):
        if len(set(self.targets)) != len(self.targets):
            raise ValueError("targets must be distinct")


GameKind = Cluster | TargetAgreement


def default_targets(grid: GridSpec) -> Tuple[int, ...]:
    """The four grid corners (deduplicated for degenerate grids)."""
    seen = []
    for s in grid.corners():
        if s not in seen:
            seen.append(s)
    return tuple(seen)


@dataclass(frozen=True)
class StepResult:
    """Synchronous all-agents step: rewards and the distribution are
    evaluated at the pre-move states."""

    next_states: np.ndarray
    rewards: np.ndarray
    distribution: EmpiricalDistribution


# Displacement per action, in (dx, dy); North decrements y, East increments x.
_MOVES = {
    Action.STAY: (0, 0),
    Action.NORTH: (0, -1),
    Action.SOUTH: (0, 1),
    Action.EAST: (1, 0),
    Action.WEST: (-1, 0),
}

_DX = np.array([_MOVES[a][0] for a in Action])
_DY = np.array([_MOVES[a][1] for a in Action])


def step_dynamics(state: int, action: int, grid: GridSpec) -> int:
    """Deterministic one-cell move; moves that would leave the grid clamp in
    place."""
    x, y = grid.to_xy(state)
    dx, dy = _MOVES[Action(action)]
    nx = min(max(x + dx, 0), grid.width - 1)
    ny = min(max(y + dy, 0), grid.height - 1)
    return grid.to_state(nx, ny)


def step_dynamics_all(states: np.ndarray, actions: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Vectorised ``step_dynamics`` over agent arrays."""
    x = states % grid.width
    y = states // grid.width
    nx = np.clip(x + _DX[actions], 0, grid.width - 1)
    ny = np.clip(y + _DY[actions], 0, grid.height - 1)
    return ny * grid.width + nx


def reward_raw(state: int, mu: EmpiricalDistribution, game: GameKind) -> float:
    """Un-normalised game reward at ``state`` under distribution ``mu``."""
    occupancy = float(mu.vector[state])
    if isinstance(game, Cluster):
        if occupancy <= 0.0:
            raise ValueError("cluster reward needs mu(s) > 0 (the agent itself is at s)")
        return math.log(occupancy)
    # Target agreement: the target reward only pays out when other agents
    # are co-located too (occupancy strictly above a single agent's share).
    if state in game.targets and occupancy > 1.0 / mu.n_agents:
        return occupancy
    return -1.0


def reward_normalise(raw: float, game: GameKind, n_agents: int) -> float:
    """Affine map of the game's raw range onto [0, 1], clamped against
    floating-point spill."""
    if isinstance(game, Cluster):
        if n_agents == 1:
            # Degenerate range [log 1, log 1]; a lone agent carries no
            # coordination signal.
            return 0.0
        lo = math.log(1.0 / n_agents)
        value = (raw - lo) / (-lo)
    else:
        value = (raw + 1.0) / 2.0
    return min(max(value, 0.0), 1.0)


def _rewards_all(states: np.ndarray, mu: EmpiricalDistribution, game: GameKind) -> np.ndarray:
    """Vectorised raw+normalised reward for every agent."""
    n = mu.n_agents
    occ = mu.vector[states]
    if isinstance(game, Cluster):
        raw = np.log(occ)
        if n == 1:
            return np.zeros(len(states))
        lo = math.log(1.0 / n)
        out = (raw - lo) / (-lo)
    else:
        on_target = np.isin(states, np.asarray(game.targets, dtype=np.intp))
        raw = np.where(on_target & (occ > 1.0 / n), occ, -1.0)
        out = (raw + 1.0) / 2.0
    return np.clip(out, 0.0, 1.0)


def env_step_all(states, actions, game: GameKind, grid: GridSpec) -> StepResult:
    """One synchronous step of the whole population.

    The empirical distribution is computed once from the full pre-move state
    vector; every agent's reward is evaluated against it before anyone
    moves.
    """
    states = np.asarray(states, dtype=np.intp)
    actions = np.asarray(actions, dtype=np.intp)
    if states.shape != actions.shape:
        raise ValueError("states and actions must have equal length")
    mu = empirical_distribution(states, grid.n_states)
    rewards = _rewards_all(states, mu, game)
    next_states = step_dynamics_all(states, actions, grid)
    return StepResult(next_states=next_states, rewards=rewards, distribution=mu)
