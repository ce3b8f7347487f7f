"""Shared domain vocabulary: grids, actions, policies, Q-tables and the
empirical state distribution of an N-agent population.

Conventions fixed here and relied on everywhere else:
  * state index = y * width + x (row-major), with x in [0, width), y in [0, height)
  * actions are the five integers STAY..WEST, |A| = 5 for the grid games
  * policies are (n_states, n_actions) float64 arrays, rows on the simplex
  * probability rows are valid when they sum to 1 within ``PROB_TOL``
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import NamedTuple, Optional, Tuple

import numpy as np

PROB_TOL = 1e-9


class Action(IntEnum):
    """Grid actions: stay in place or move one cell in a cardinal direction."""

    STAY = 0
    NORTH = 1
    SOUTH = 2
    EAST = 3
    WEST = 4


N_ACTIONS = len(Action)


@dataclass(frozen=True)
class GridSpec:
    """Rectangular grid of width x height cells, states indexed row-major."""

    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("grid dimensions must be >= 1")

    @property
    def n_states(self) -> int:
        return self.width * self.height

    def to_xy(self, state: int) -> Tuple[int, int]:
        return state % self.width, state // self.width

    def to_state(self, x: int, y: int) -> int:
        return y * self.width + x

    @property
    def diagonal(self) -> float:
        """Maximum possible distance in the grid, between opposite corners."""
        return math.hypot(self.width - 1, self.height - 1)

    def corners(self) -> Tuple[int, int, int, int]:
        w, h = self.width, self.height
        return (self.to_state(0, 0), self.to_state(w - 1, 0),
                self.to_state(0, h - 1), self.to_state(w - 1, h - 1))


class Transition(NamedTuple):
    """One SARSA tuple (s, a, r, s', a'), the unit stored in replay buffers."""

    s: int
    a: int
    r: float
    s_next: int
    a_next: int


def validate_policy(pi: np.ndarray) -> None:
    """Raise if ``pi`` is not a row-stochastic (n_states, n_actions) table."""
    if pi.ndim != 2:
        raise ValueError("policy must be a 2-D table")
    if np.any(pi < -PROB_TOL) or np.any(pi > 1 + PROB_TOL):
        raise ValueError("policy entries must lie in [0, 1]")
    sums = pi.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > PROB_TOL):
        raise ValueError("policy rows must sum to 1")


def renormalise_rows(pi: np.ndarray) -> np.ndarray:
    """Clip tiny negatives and rescale each row to sum exactly to 1.

    Applied after any floating-point-producing policy operation to stop
    drift from accumulating over long runs.
    """
    out = np.clip(pi, 0.0, None)
    out /= out.sum(axis=1, keepdims=True)
    return out


def uniform_policy(n_states: int, n_actions: int) -> np.ndarray:
    """Maximum-entropy policy: every entry 1/n_actions."""
    if n_states < 1 or n_actions < 1:
        raise ValueError("n_states and n_actions must be >= 1")
    return np.full((n_states, n_actions), 1.0 / n_actions)


def entropy_h(u: np.ndarray, lam: float) -> float:
    """Scaled entropy regulariser -lam * sum_a u(a) log u(a), with 0 log 0 = 0."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    u = np.asarray(u, dtype=float)
    if np.any(u < -PROB_TOL):
        raise ValueError("probability vector has negative entries")
    if abs(u.sum() - 1.0) > PROB_TOL:
        raise ValueError("probability vector must sum to 1")
    if lam == 0.0:
        return 0.0
    mask = u > 0.0
    return float(-lam * np.sum(u[mask] * np.log(u[mask])))


def entropy_rows(pi: np.ndarray, lam: float) -> np.ndarray:
    """Per-row scaled entropy of a policy table (vectorised ``entropy_h``)."""
    if lam == 0.0:
        return np.zeros(pi.shape[0])
    safe = np.where(pi > 0.0, pi, 1.0)
    return -lam * np.sum(pi * np.log(safe), axis=1)


def q_max(gamma: float, lam: float, n_actions: int) -> float:
    """Upper bound (1 + h_max) / (1 - gamma) used to initialise Q-tables.

    h_max = lam * log(n_actions) is the entropy regulariser's maximum,
    achieved by the uniform distribution.
    """
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must lie in [0, 1)")
    h_max = lam * math.log(n_actions)
    return (1.0 + h_max) / (1.0 - gamma)


def init_qtable(n_states: int, n_actions: int, gamma: float, lam: float) -> np.ndarray:
    """Fresh Q-table with every entry at q_max."""
    return np.full((n_states, n_actions), q_max(gamma, lam, n_actions))


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Fraction of the N agents occupying each state.

    Entries are integer multiples of 1/n_agents and sum to 1.
    """

    vector: np.ndarray
    n_agents: int

    def __post_init__(self):
        if self.n_agents < 1:
            raise ValueError("n_agents must be >= 1")


def empirical_distribution(states, n_states: int) -> EmpiricalDistribution:
    """Count-based state distribution of the population."""
    states = np.asarray(states, dtype=np.intp)
    if states.size == 0:
        raise ValueError("state list must be non-empty")
    if np.any(states < 0) or np.any(states >= n_states):
        raise ValueError("state index out of bounds")
    counts = np.bincount(states, minlength=n_states)
    return EmpiricalDistribution(counts / states.size, int(states.size))


@dataclass
class Hyperparams:
    """Full hyperparameter record for one training run.

    Loop counts follow the nested structure of the learning loop: K outer
    policy updates, M_pg TD samples per update, M_td environment steps per
    sample, C communication rounds, L replay passes, E return-evaluation
    steps. ``p_inf`` and ``delta_mix`` feed only the theoretical TD
    learning-rate schedule.
    """

    K: int = 200
    M_pg: int = 500
    M_td: int = 1
    C: int = 1
    L: int = 100
    E: int = 100
    gamma: float = 0.9
    beta: float = 0.1
    eta: float = 0.01
    lam: float = 0.0
    tau_mode: str = "annealed"       # annealed | fixed | max
    tau_fixed_value: float = 100.0
    beta_mode: str = "fixed"         # fixed | theoretical
    p_inf: float = 1.0
    delta_mix: float = 1.0
    n_agents: int = 250
    broadcast_radius_fraction: float = 1.0
    architecture: str = "networked"  # networked | centralised | independent
    fail_prob: float = 0.0
    population_add: Optional[Tuple[int, int]] = None  # (k_add, n_add)
    seed: int = 0

    def __post_init__(self):
        for name in ("K", "M_pg", "M_td", "C", "L", "E"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if self.beta <= 0.0:
            raise ValueError("beta must be > 0")
        if self.eta <= 0.0:
            raise ValueError("eta must be > 0")
        if self.lam < 0.0:
            raise ValueError("lambda must be >= 0")
        if self.tau_mode not in ("annealed", "fixed", "max"):
            raise ValueError("tau_mode must be annealed, fixed or max")
        if self.tau_mode == "fixed" and self.tau_fixed_value <= 0.0:
            raise ValueError("fixed tau value must be > 0")
        if self.beta_mode not in ("fixed", "theoretical"):
            raise ValueError("beta_mode must be fixed or theoretical")
        for name in ("p_inf", "delta_mix"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1]")
        if self.n_agents < 1:
            raise ValueError("n_agents must be >= 1")
        if not 0.0 <= self.broadcast_radius_fraction <= 1.0:
            raise ValueError("broadcast_radius_fraction must lie in [0, 1]")
        if self.architecture not in ("networked", "centralised", "independent"):
            raise ValueError("architecture must be networked, centralised or independent")
        if not 0.0 <= self.fail_prob <= 1.0:
            raise ValueError("fail_prob must lie in [0, 1]")
        if self.population_add is not None:
            k_add, n_add = self.population_add
            if k_add < 0 or n_add < 0:
                raise ValueError("population_add entries must be >= 0")

    @property
    def effective_C(self) -> int:
        """Independent learning is the no-communication special case."""
        return 0 if self.architecture == "independent" else self.C
