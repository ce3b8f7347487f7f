"""Evaluation metrics recorded per outer iteration: an exploitability
approximation, average discounted return, and the population's policy
divergence, plus cross-trial aggregation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

METRIC_NAMES = ("avg_return", "exploitability", "policy_divergence")


@dataclass
class RunLog:
    """Time-indexed metric records for one trial.

    At most one row per (k, metric); rows are kept sorted by k then metric
    name so serialisation is canonical.
    """

    trial_seed: int
    config_digest: str = ""
    rows: List[Tuple[int, str, float]] = field(default_factory=list)

    def record(self, k: int, metric: str, value: float) -> None:
        if metric not in METRIC_NAMES:
            raise ValueError(f"unknown metric {metric!r}")
        if self.rows and k < self.rows[-1][0]:
            raise ValueError("k must be non-decreasing")
        if any(r[0] == k and r[1] == metric for r in self.rows):
            raise ValueError(f"duplicate row ({k}, {metric})")
        self.rows.append((k, metric, float(value)))

    def series(self, metric: str) -> Dict[int, float]:
        return {k: v for k, m, v in self.rows if m == metric}


def policy_divergence(policies: Sequence[np.ndarray]) -> float:
    """Average sup-state L1 distance of each agent's policy from agent 0's:
    (1/N) sum_i max_s ||pi_i(s) - pi_0(s)||_1."""
    n = len(policies)
    if n < 1:
        raise ValueError("need at least one policy")
    ref = policies[0]
    total = 0.0
    for pi in policies:
        total += float(np.max(np.sum(np.abs(pi - ref), axis=1)))
    return total / n


def average_return(per_agent_discounted_returns) -> float:
    """Population mean of per-agent discounted returns for one iteration."""
    arr = np.asarray(per_agent_discounted_returns, dtype=float)
    if arr.size == 0:
        raise ValueError("need at least one return")
    return float(arr.mean())


def exploitability_approx(run, probe_loops, hp, game, grid, probe_seed) -> float:
    """Deviating-agent improvement probe, run on a fork of the live system.

    Thin re-export wrapper so the metric surface lives here while the probe
    shares the orchestrator's phase machinery.
    """
    from .orchestrator import run_exploitability_probe

    return run_exploitability_probe(run, probe_loops, hp, game, grid, probe_seed)


def aggregate_trials(logs: Sequence[RunLog]):
    """Cross-trial mean and population standard deviation per (k, metric).

    Returns rows (k, metric, mean, std, n_trials) sorted by k then metric.
    All logs must share one config digest.
    """
    if not logs:
        raise ValueError("need at least one log")
    digests = {log.config_digest for log in logs}
    if len(digests) != 1:
        raise ValueError("logs come from differing configs")
    cells: Dict[Tuple[int, str], List[float]] = {}
    for log in logs:
        for k, metric, value in log.rows:
            cells.setdefault((k, metric), []).append(value)
    out = []
    for (k, metric) in sorted(cells, key=lambda km: (km[0], km[1])):
        values = np.asarray(cells[(k, metric)])
        out.append((k, metric, float(values.mean()), float(values.std()), len(values)))
    return out
