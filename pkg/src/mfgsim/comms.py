"""Networked-communication layer: radius graphs over agent positions,
softmax-weighted adoption of (score, policy) pairs, temperature scheduling
and consensus diagnostics.

A temperature of exactly 0 selects "max mode": deterministic adoption of the
highest score in the neighbourhood, ties broken by lowest agent index. This
avoids dividing by a vanishing temperature and makes the
consensus-in-diameter-rounds property exactly testable.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Sequence, Set, Tuple, Union

import numpy as np

from .core import GridSpec

MAX_MODE = 0.0


@dataclass(frozen=True)
class CommGraph:
    """Undirected communication graph on agent indices 0..n-1."""

    n: int
    edges: FrozenSet[Tuple[int, int]]

    def __post_init__(self):
        for i, j in self.edges:
            if i == j:
                raise ValueError("self-loops are not allowed")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError("edge endpoint out of range")

    @staticmethod
    def from_pairs(n: int, pairs) -> "CommGraph":
        """Canonicalise arbitrary (i, j) pairs into sorted undirected edges."""
        edges = frozenset((min(i, j), max(i, j)) for i, j in pairs if i != j)
        return CommGraph(n, edges)

    def adjacency(self) -> List[List[int]]:
        adj: List[List[int]] = [[] for _ in range(self.n)]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        for nbrs in adj:
            nbrs.sort()
        return adj


def build_graph(states, grid: GridSpec, radius_fraction: float) -> CommGraph:
    """Radius graph: agents are linked when the Euclidean distance between
    their cells is at most radius_fraction times the grid diagonal."""
    if not 0.0 <= radius_fraction <= 1.0:
        raise ValueError("radius_fraction must lie in [0, 1]")
    states = np.asarray(states, dtype=np.intp)
    n = len(states)
    x = states % grid.width
    y = states // grid.width
    threshold = radius_fraction * grid.diagonal
    d2 = (x[:, None] - x[None, :]) ** 2 + (y[:, None] - y[None, :]) ** 2
    close = d2 <= threshold * threshold + 1e-12
    ii, jj = np.nonzero(np.triu(close, k=1))
    return CommGraph(n, frozenset(zip(ii.tolist(), jj.tolist())))


def neighbourhood(i: int, g: CommGraph) -> Set[int]:
    """The agent itself plus its graph neighbours."""
    if not 0 <= i < g.n:
        raise ValueError("agent index out of range")
    out = {i}
    for a, b in g.edges:
        if a == i:
            out.add(b)
        elif b == i:
            out.add(a)
    return out


@dataclass(frozen=True)
class FixedTau:
    value: float

    def __post_init__(self):
        if self.value <= 0:
            raise ValueError("fixed tau must be > 0")


@dataclass(frozen=True)
class AnnealedTau:
    """Stepped annealing: tau_0 = 1e4 / 10^ceil((K-1)/10), multiplied by 10
    at every k with k mod 10 == 1 (each decade of iterations)."""

    K: int


@dataclass(frozen=True)
class MaxTau:
    """Dedicated tau -> 0 mode: deterministic max selection."""


TauSchedule = Union[FixedTau, AnnealedTau, MaxTau]


def tau_at(schedule: TauSchedule, k: int) -> float:
    """Temperature at outer iteration k; 0.0 encodes max mode."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if isinstance(schedule, FixedTau):
        return schedule.value
    if isinstance(schedule, MaxTau):
        return MAX_MODE
    start_exp = 4 - math.ceil((schedule.K - 1) / 10)
    steps = 0 if k < 1 else (k - 1) // 10 + 1
    return 10.0 ** (start_exp + steps)


def softmax_adopt(sigmas: Dict[int, float], tau: float,
                  rng: np.random.Generator) -> int:
    """Sample a member of the neighbourhood with probability proportional to
    exp(sigma / tau), max-subtracted for overflow safety."""
    if not sigmas:
        raise ValueError("neighbourhood must be non-empty")
    if tau <= 0:
        raise ValueError("tau must be > 0 (use max_adopt for the tau->0 mode)")
    members = sorted(sigmas)
    values = np.array([sigmas[j] for j in members]) / tau
    values -= values.max()
    weights = np.exp(values)
    probs = weights / weights.sum()
    u = rng.random()
    return members[int(np.searchsorted(np.cumsum(probs), u, side="right").clip(0, len(members) - 1))]


def max_adopt(sigmas: Dict[int, float]) -> int:
    """Deterministic tau -> 0 selection: highest sigma, lowest index on ties."""
    if not sigmas:
        raise ValueError("neighbourhood must be non-empty")
    best = max(sigmas.values())
    return min(j for j, v in sigmas.items() if v == best)


def communication_round(policies: Sequence[np.ndarray], sigmas: Sequence[float],
                        g: CommGraph, tau: float,
                        rngs: Sequence[np.random.Generator]
                        ) -> Tuple[List[np.ndarray], List[float]]:
    """One synchronous broadcast/adopt round.

    Every agent selects from its neighbourhood using the pre-round snapshot,
    so adopted pairs do not propagate further within the round. Adopted
    policies are value copies.
    """
    n = g.n
    if not (len(policies) == len(sigmas) == n):
        raise ValueError("policies and sigmas must have length n")
    adj = g.adjacency()
    new_policies: List[np.ndarray] = []
    new_sigmas: List[float] = []
    for i in range(n):
        received = {i: sigmas[i]}
        for j in adj[i]:
            received[j] = sigmas[j]
        if tau == MAX_MODE:
            chosen = max_adopt(received)
        else:
            chosen = softmax_adopt(received, tau, rngs[i])
        new_policies.append(policies[chosen].copy())
        new_sigmas.append(sigmas[chosen])
    return new_policies, new_sigmas


def graph_diameter(g: CommGraph) -> float:
    """Longest shortest path via BFS from every vertex; inf when disconnected."""
    if g.n == 0:
        return 0
    adj = g.adjacency()
    diameter = 0
    for src in range(g.n):
        dist = [-1] * g.n
        dist[src] = 0
        queue = deque([src])
        while queue:
            v = queue.popleft()
            for w in adj[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
        if min(dist) < 0:
            return math.inf
        diameter = max(diameter, max(dist))
    return diameter


def f_of(C: int, d: int) -> float:
    """Residual divergence factor (1 - 1/d)^C before consensus, 0 once the
    round count reaches the diameter."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if C < 0:
        raise ValueError("C must be >= 0")
    if C >= d:
        return 0.0
    return (1.0 - 1.0 / d) ** C
