"""Per-agent learning core: stochastic TD updates, policy mirror ascent and
the per-iteration experience replay buffer.

The PMA update maximises, independently per state,

    <u, q(s, .)> + entropy(u) - ||u - pi(s)||^2 / (2 eta)      over the simplex.

With no entropy term this reduces algebraically to the Euclidean projection
of pi(s) + eta * q(s, .) onto the simplex, solved in closed form; with an
entropy term the per-row stationarity system is solved exactly through its
simplex multiplier.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import List, Sequence, Union

import numpy as np

from .core import Transition, entropy_h, renormalise_rows

_LOG_FLOOR = 1e-12


# ---------------------------------------------------------------------------
# TD learning
# ---------------------------------------------------------------------------

def td_update(q: np.ndarray, zeta: Transition, pi: np.ndarray, beta: float,
              lam: float, gamma: float) -> np.ndarray:
    """One stochastic TD step on entry (s, a) of a copy of ``q``.

    Target is the regularised SARSA target r + h(pi(s)) + gamma q(s', a').
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    out = q.copy()
    _td_update_inplace(out, zeta, pi, beta, lam, gamma)
    return out


def _td_update_inplace(q, zeta: Transition, pi, beta, lam, gamma):
    h = entropy_h(pi[zeta.s], lam) if lam > 0.0 else 0.0
    old = q[zeta.s, zeta.a]
    q[zeta.s, zeta.a] = old - beta * (old - zeta.r - h - gamma * q[zeta.s_next, zeta.a_next])


@dataclass(frozen=True)
class FixedBeta:
    beta: float

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("fixed beta must be > 0")


@dataclass(frozen=True)
class TheoreticalBeta:
    """Decaying schedule beta_m = 2 / ((1 - gamma) (t0 + m - 1))."""

    t0: float

    def __post_init__(self):
        if self.t0 <= 1:
            raise ValueError("t0 must be > 1")


BetaSchedule = Union[FixedBeta, TheoreticalBeta]


def beta_at(schedule: BetaSchedule, m: int, gamma: float) -> float:
    if m < 0:
        raise ValueError("m must be >= 0")
    if isinstance(schedule, FixedBeta):
        return schedule.beta
    denom = (1.0 - gamma) * (schedule.t0 + m - 1)
    if denom <= 0:
        raise ValueError("theoretical schedule needs t0 + m - 1 > 0")
    return 2.0 / denom


def t0_of(gamma: float, delta_mix: float, p_inf: float) -> float:
    """Mixing-time constant 16 (1 + gamma)^2 / ((1 - gamma) delta_mix p_inf)^2."""
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must lie in [0, 1)")
    denom = (1.0 - gamma) * delta_mix * p_inf
    if denom == 0:
        raise ValueError("zero denominator in t0")
    return 16.0 * (1.0 + gamma) ** 2 / denom ** 2


# ---------------------------------------------------------------------------
# Policy mirror ascent
# ---------------------------------------------------------------------------

def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row of ``v`` onto the probability simplex.

    Sort-based algorithm; stable descending sort so ties resolve by index,
    which keeps the output deterministic across platforms.
    """
    v = np.atleast_2d(np.asarray(v, dtype=float))
    n = v.shape[1]
    # stable descending sort by value, ascending index on ties
    u = -np.sort(-v, axis=1, kind="stable")
    css = np.cumsum(u, axis=1) - 1.0
    idx = np.arange(1, n + 1)
    cond = u - css / idx > 0
    rho = np.count_nonzero(cond, axis=1)
    theta = css[np.arange(v.shape[0]), rho - 1] / rho
    return np.maximum(v - theta[:, None], 0.0)


def pma_objective(u, q_row, pi_row, eta: float, lam: float) -> float:
    """Scalar value of the mirror-ascent objective at ``u``."""
    if eta <= 0:
        raise ValueError("eta must be > 0")
    u = np.asarray(u, dtype=float)
    q_row = np.asarray(q_row, dtype=float)
    pi_row = np.asarray(pi_row, dtype=float)
    value = float(u @ q_row)
    if lam > 0.0:
        value += entropy_h(u, lam)
    diff = u - pi_row
    return value - float(diff @ diff) / (2.0 * eta)


def _entropy_stationary_log(target, eta, lam, iterations=30):
    """Solve lam * x + exp(x) / eta = target for x = log(u), elementwise.

    The left side is convex and increasing, so Newton started on its
    non-negative side (x0 = max(0, log(eta * target)) guarantees it)
    decreases monotonically to the root: globally convergent, no overflow.
    """
    x = np.maximum(0.0, np.log(eta * np.maximum(target, _LOG_FLOOR)))
    for _ in range(iterations):
        ex = np.exp(x)
        x = x - (lam * x + ex / eta - target) / (lam + ex / eta)
    return x


def _pma_solve_entropy(q, pi, eta, lam):
    """Exact solver for the entropy-regularised problem, all rows at once.

    Stationarity ties every coordinate to one multiplier nu per row:
    lam * log(u) + u / eta = q + pi / eta - lam - nu, with u always interior
    because the entropy gradient diverges at the boundary. The row sums are
    strictly decreasing in nu, so bisection on nu pins sum(u) = 1.
    """
    c = q + pi / eta - lam
    nu_lo = c.min(axis=1, keepdims=True) - 1.0 / eta
    n = q.shape[1]
    nu_hi = c.max(axis=1, keepdims=True) - lam * math.log(1.0 / n) - 1.0 / (n * eta)
    u = None
    for _ in range(80):
        nu = 0.5 * (nu_lo + nu_hi)
        u = np.exp(_entropy_stationary_log(c - nu, eta, lam))
        too_big = u.sum(axis=1, keepdims=True) > 1.0
        nu_lo = np.where(too_big, nu, nu_lo)
        nu_hi = np.where(too_big, nu_hi, nu)
    residual = np.max(np.abs(u.sum(axis=1) - 1.0))
    if residual > 1e-6:
        warnings.warn("PMA entropy solver residual %.3g after the iteration cap;"
                      " returning best iterate" % residual, RuntimeWarning)
    return u


def pma_update(q: np.ndarray, pi: np.ndarray, eta: float, lam: float) -> np.ndarray:
    """Mirror-ascent policy update, one simplex problem per state.

    lam == 0 uses the closed-form projection of pi + eta * q; lam > 0 runs
    the iterative dual solver over all rows. Rows are renormalised
    post-solve.
    """
    if eta <= 0:
        raise ValueError("eta must be > 0")
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    if lam == 0.0:
        out = project_simplex(pi + eta * q)
    else:
        out = _pma_solve_entropy(np.asarray(q, dtype=float),
                                 np.asarray(pi, dtype=float), eta, lam)
    return renormalise_rows(out)


# ---------------------------------------------------------------------------
# Experience replay
# ---------------------------------------------------------------------------

class ReplayBuffer:
    """Per-iteration transition store, capacity M_pg, emptied each outer loop."""

    def __init__(self, capacity: int):
        if capacity < 0:
            raise ValueError("capacity must be >= 0")
        self.capacity = capacity
        self._items: List[Transition] = []

    def __len__(self) -> int:
        return len(self._items)

    @property
    def transitions(self) -> Sequence[Transition]:
        return tuple(self._items)

    def push(self, zeta: Transition) -> None:
        if len(self._items) >= self.capacity:
            raise OverflowError("replay buffer is full")
        self._items.append(zeta)

    def clear(self) -> None:
        self._items.clear()

    def as_arrays(self):
        """Column arrays (s, a, r, s', a') in arrival order."""
        n = len(self._items)
        s = np.fromiter((z.s for z in self._items), dtype=np.intp, count=n)
        a = np.fromiter((z.a for z in self._items), dtype=np.intp, count=n)
        r = np.fromiter((z.r for z in self._items), dtype=float, count=n)
        s2 = np.fromiter((z.s_next for z in self._items), dtype=np.intp, count=n)
        a2 = np.fromiter((z.a_next for z in self._items), dtype=np.intp, count=n)
        return s, a, r, s2, a2


def buffer_push(buf: ReplayBuffer, zeta: Transition) -> ReplayBuffer:
    """Append ``zeta``; provided for symmetry with ``buffer_replay``."""
    buf.push(zeta)
    return buf


def buffer_replay(buf: ReplayBuffer, q: np.ndarray, pi: np.ndarray, L: int,
                  beta: float, lam: float, gamma: float,
                  rng: np.random.Generator) -> np.ndarray:
    """L passes over the buffer, freshly shuffled before each, TD-updating a
    copy of ``q`` on every stored transition in shuffle order."""
    if L < 0:
        raise ValueError("L must be >= 0")
    out = q.copy()
    items = buf._items
    n = len(items)
    for _ in range(L):
        order = rng.permutation(n)
        for j in order:
            _td_update_inplace(out, items[j], pi, beta, lam, gamma)
    return out
