"""Training loops for learning along a single, non-episodic system run.

Two drivers share one loop skeleton:

  * ``run_theoretical`` — TD update on the lagged transition once per sample,
    with either a fixed or a decaying learning-rate schedule.
  * ``run_replay`` — transitions are stored per iteration and replayed in L
    shuffled passes before the policy update (the practical variant).

Both support the three architectures: ``networked`` (softmax adoption of
broadcast policies over a radius graph), ``centralised`` (agent 0's updated
policy is pushed to everyone each iteration) and ``independent`` (no
communication, equivalent to running networked with C = 0).

Randomness is split into named substreams of the trial seed so that runs are
bit-reproducible and population growth is well defined:

  * agent ``i``: SeedSequence(trial_seed, spawn_key=(0, i)) — actions,
    shuffles, adoption draws and the agent's initial cell;
  * update-failure draws: spawn_key=(1,);
  * exploitability probe at metric row ``k``: entropy (trial_seed, 2, k),
    one spawned stream per agent.

The global step counter ``t`` advances by exactly 1 for every environment
step anywhere in the loop: sampling, return evaluation and the step
interleaved with each communication round. It never resets.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, List, Optional, Sequence

import numpy as np

from .comms import AnnealedTau, FixedTau, MaxTau, TauSchedule, build_graph, communication_round, tau_at
from .core import Hyperparams, N_ACTIONS, GridSpec, Transition, entropy_rows, init_qtable, q_max, uniform_policy
from .environment import GameKind, env_step_all
from .learning import BetaSchedule, FixedBeta, ReplayBuffer, TheoreticalBeta, beta_at, pma_update, t0_of
from .metrics import RunLog, average_return, policy_divergence

_AGENT_DOMAIN = 0
_FAILURE_DOMAIN = 1
_PROBE_DOMAIN = 2

# Steps taken at the start of every sampling phase so that the two-step-lagged
# transition is complete and was generated under the current policies.
WARMUP_STEPS = 2


def _agent_rng(trial_seed: int, agent: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=trial_seed, spawn_key=(_AGENT_DOMAIN, agent)))


def _failure_rng(trial_seed: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=trial_seed, spawn_key=(_FAILURE_DOMAIN,)))


@dataclass
class _StepRecord:
    pre_states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray


@dataclass
class RunState:
    """Live per-agent simulation state for one trial."""

    trial_seed: int
    t: int
    k: int
    states: np.ndarray
    policies: List[np.ndarray]
    qtables: np.ndarray                  # (n_agents, n_states, n_actions)
    buffers: List[ReplayBuffer]
    sigmas: np.ndarray
    rngs: List[np.random.Generator]
    history: Deque[_StepRecord] = field(default_factory=lambda: deque(maxlen=2))

    @property
    def n_agents(self) -> int:
        return len(self.states)


def init_run_state(hp: Hyperparams, grid: GridSpec) -> RunState:
    """Fresh state: uniform policies, q_max Q-tables, uniform-random initial
    cells drawn as the first sample of each agent's own substream."""
    n = hp.n_agents
    rngs = [_agent_rng(hp.seed, i) for i in range(n)]
    states = np.array([rng.integers(0, grid.n_states) for rng in rngs], dtype=np.intp)
    policies = [uniform_policy(grid.n_states, N_ACTIONS) for _ in range(n)]
    qtables = np.stack([init_qtable(grid.n_states, N_ACTIONS, hp.gamma, hp.lam)
                        for _ in range(n)])
    buffers = [ReplayBuffer(hp.M_pg) for _ in range(n)]
    return RunState(trial_seed=hp.seed, t=0, k=0, states=states, policies=policies,
                    qtables=qtables, buffers=buffers, sigmas=np.zeros(n), rngs=rngs)


def population_add_event(run: RunState, n_add: int, grid: GridSpec,
                         hp: Hyperparams) -> RunState:
    """Append n_add agents: uniform policies, fresh q_max tables, empty
    buffers, uniform-random cells from each new agent's own substream."""
    if n_add < 0:
        raise ValueError("n_add must be >= 0")
    if n_add == 0:
        return run
    old_n = run.n_agents
    new_rngs = [_agent_rng(run.trial_seed, old_n + j) for j in range(n_add)]
    new_states = np.array([rng.integers(0, grid.n_states) for rng in new_rngs],
                          dtype=np.intp)
    run.rngs.extend(new_rngs)
    run.states = np.concatenate([run.states, new_states])
    run.policies.extend(uniform_policy(grid.n_states, N_ACTIONS) for _ in range(n_add))
    fresh_q = np.stack([init_qtable(grid.n_states, N_ACTIONS, hp.gamma, hp.lam)
                        for _ in range(n_add)])
    run.qtables = np.concatenate([run.qtables, fresh_q], axis=0)
    run.buffers.extend(ReplayBuffer(hp.M_pg) for _ in range(n_add))
    run.sigmas = np.concatenate([run.sigmas, np.zeros(n_add)])
    return run


def inject_update_failure(k: int, p_fail: float, rng: np.random.Generator,
                          n_learners: int) -> np.ndarray:
    """Independent Bernoulli(p_fail) skip flag per learner for iteration k.

    Draws are sequential on the dedicated failure stream; ``k`` documents
    which iteration the flags belong to.
    """
    if not 0.0 <= p_fail <= 1.0:
        raise ValueError("p_fail must lie in [0, 1]")
    return rng.random(n_learners) < p_fail


def _sample_actions(run: RunState) -> np.ndarray:
    """One action per agent from its current policy row, one uniform draw per
    agent from its own substream (inverse-CDF sampling)."""
    n = run.n_agents
    rows = np.stack([run.policies[i][run.states[i]] for i in range(n)])
    cum = np.cumsum(rows, axis=1)
    u = np.array([rng.random() for rng in run.rngs])
    return np.minimum((u[:, None] >= cum).sum(axis=1), rows.shape[1] - 1).astype(np.intp)


def _step(run: RunState, game: GameKind, grid: GridSpec) -> np.ndarray:
    """Advance the live environment one synchronous step; returns rewards."""
    actions = _sample_actions(run)
    result = env_step_all(run.states, actions, game, grid)
    run.history.append(_StepRecord(run.states, actions, result.rewards))
    run.states = result.next_states
    run.t += 1
    return result.rewards


def _entropy_table(policies: Sequence[np.ndarray], lam: float) -> Optional[np.ndarray]:
    """(n_agents, n_states) table of per-row policy entropies, or None when
    the regulariser is off."""
    if lam == 0.0:
        return None
    return np.stack([entropy_rows(pi, lam) for pi in policies])


def lagged_transition(run: RunState, agent: int) -> Transition:
    """The most recent complete SARSA tuple of one agent (two-step lag)."""
    older, newer = run.history[0], run.history[1]
    return Transition(int(older.pre_states[agent]), int(older.actions[agent]),
                      float(older.rewards[agent]), int(newer.pre_states[agent]),
                      int(newer.actions[agent]))


def _step_accumulating(run, game, grid, ent, returns, disc) -> None:
    """Step once, adding disc * (reward + h(policy at pre-move state)) to each
    agent's running return."""
    pre = run.states
    rewards = _step(run, game, grid)
    if ent is None:
        returns += disc * rewards
    else:
        returns += disc * (rewards + ent[np.arange(len(pre)), pre])


def _td_batch(run: RunState, learners: np.ndarray, ent, beta: float, gamma: float) -> None:
    """Vectorised TD update of each learner's own table on its lagged
    transition; arithmetic matches the scalar ``td_update`` bit for bit."""
    older, newer = run.history[0], run.history[1]
    s = older.pre_states[learners]
    a = older.actions[learners]
    r = older.rewards[learners]
    s2 = newer.pre_states[learners]
    a2 = newer.actions[learners]
    h = 0.0 if ent is None else ent[learners, s]
    q = run.qtables
    old = q[learners, s, a]
    nxt = q[learners, s2, a2]
    q[learners, s, a] = old - beta * (old - r - h - gamma * nxt)


def _sampling_phase(run: RunState, hp: Hyperparams, game: GameKind, grid: GridSpec,
                    learners: np.ndarray, mode: str,
                    beta_schedule: Optional[BetaSchedule]) -> np.ndarray:
    """Warmup plus M_pg sampling loops under the current policies.

    mode "replay" stores each lagged transition in the learner's buffer;
    mode "theoretical" TD-updates on it immediately at the scheduled rate.
    Returns each agent's discounted regularised return over the M_pg * M_td
    sampled steps, exponent reset at the first of them; the warmup steps
    advance the environment but lie outside the return window.
    """
    returns = np.zeros(run.n_agents)
    disc = 1.0
    ent = _entropy_table(run.policies, hp.lam)
    for _ in range(WARMUP_STEPS):
        _step(run, game, grid)
    for m in range(hp.M_pg):
        for _ in range(hp.M_td):
            _step_accumulating(run, game, grid, ent, returns, disc)
            disc *= hp.gamma
        if mode == "replay":
            for i in learners:
                run.buffers[int(i)].push(lagged_transition(run, int(i)))
        else:
            _td_batch(run, learners, ent, beta_at(beta_schedule, m, hp.gamma), hp.gamma)
    return returns


def _replay_phase(run: RunState, hp: Hyperparams, learners: np.ndarray) -> None:
    """L shuffled passes over every learner's buffer, vectorised across
    learners; each learner's shuffles come from its own substream."""
    if hp.L == 0 or hp.M_pg == 0 or len(learners) == 0:
        return
    ent = _entropy_table(run.policies, hp.lam)
    cols = [run.buffers[int(i)].as_arrays() for i in learners]
    s_buf = np.stack([c[0] for c in cols])
    a_buf = np.stack([c[1] for c in cols])
    r_buf = np.stack([c[2] for c in cols])
    s2_buf = np.stack([c[3] for c in cols])
    a2_buf = np.stack([c[4] for c in cols])
    m = s_buf.shape[1]
    rows = np.arange(len(learners))
    q = run.qtables
    beta, gamma = hp.beta, hp.gamma
    for _ in range(hp.L):
        perms = np.stack([run.rngs[int(i)].permutation(m) for i in learners])
        for pos in range(m):
            js = perms[:, pos]
            s = s_buf[rows, js]
            a = a_buf[rows, js]
            r = r_buf[rows, js]
            s2 = s2_buf[rows, js]
            a2 = a2_buf[rows, js]
            h = 0.0 if ent is None else ent[learners, s]
            old = q[learners, s, a]
            nxt = q[learners, s2, a2]
            q[learners, s, a] = old - beta * (old - r - h - gamma * nxt)


def evaluate_sigma(run: RunState, E: int, gamma: float, lam: float,
                   game: GameKind, grid: GridSpec) -> np.ndarray:
    """Advance the live environment E steps under the current policies,
    accumulating each agent's discounted regularised reward (exponent reset
    at the phase start)."""
    if E < 0:
        raise ValueError("E must be >= 0")
    sigmas = np.zeros(run.n_agents)
    disc = 1.0
    ent = _entropy_table(run.policies, lam)
    for _ in range(E):
        _step_accumulating(run, game, grid, ent, sigmas, disc)
        disc *= gamma
    return sigmas


def _communication_phase(run: RunState, hp: Hyperparams, game: GameKind,
                         grid: GridSpec, tau: float) -> None:
    """C rounds of broadcast/adopt, the radius graph rebuilt from current
    positions before each round, one environment step interleaved after."""
    for _ in range(hp.effective_C):
        graph = build_graph(run.states, grid, hp.broadcast_radius_fraction)
        new_policies, new_sigmas = communication_round(
            run.policies, run.sigmas, graph, tau, run.rngs)
        run.policies = new_policies
        run.sigmas = np.asarray(new_sigmas)
        _step(run, game, grid)


def _tau_schedule_of(hp: Hyperparams) -> TauSchedule:
    if hp.tau_mode == "fixed":
        return FixedTau(hp.tau_fixed_value)
    if hp.tau_mode == "max":
        return MaxTau()
    return AnnealedTau(hp.K)


def _beta_schedule_of(hp: Hyperparams) -> BetaSchedule:
    if hp.beta_mode == "theoretical":
        return TheoreticalBeta(t0_of(hp.gamma, hp.delta_mix, hp.p_inf))
    return FixedBeta(hp.beta)


def run_exploitability_probe(run: RunState, probe_loops: int, hp: Hyperparams,
                             game: GameKind, grid: GridSpec, probe_seed) -> float:
    """Deviating-agent improvement probe on a fork of the live system.

    All policies except agent 0's are frozen; the deviator runs
    ``probe_loops`` iterations of the replay learning core (reusing the main
    run's eta, beta, L, M_pg, M_td). The result is the deviator's best
    per-loop discounted return minus the mean of the other agents' per-loop
    returns. The fork owns fresh substreams derived from ``probe_seed``, so
    the live run's state and randomness are untouched.
    """
    if probe_loops < 1:
        raise ValueError("probe_loops must be >= 1")
    n = run.n_agents
    probe_rngs = [np.random.default_rng(np.random.SeedSequence(entropy=probe_seed,
                                                               spawn_key=(i,)))
                  for i in range(n)]
    fork = RunState(trial_seed=run.trial_seed, t=0, k=0,
                    states=run.states.copy(),
                    policies=[pi.copy() for pi in run.policies],
                    qtables=run.qtables.copy(),
                    buffers=[ReplayBuffer(hp.M_pg) for _ in range(n)],
                    sigmas=np.zeros(n), rngs=probe_rngs)
    deviator = np.array([0])
    qmax_value = q_max(hp.gamma, hp.lam, N_ACTIONS)
    best_deviator = -math.inf
    other_means = []
    for _ in range(probe_loops):
        fork.qtables[0] = qmax_value
        fork.buffers[0].clear()
        returns = _sampling_phase(fork, hp, game, grid, deviator, "replay", None)
        _replay_phase(fork, hp, deviator)
        fork.policies[0] = pma_update(fork.qtables[0], fork.policies[0], hp.eta, hp.lam)
        best_deviator = max(best_deviator, float(returns[0]))
        other_means.append(float(returns[1:].mean()) if n > 1 else 0.0)
    return best_deviator - float(np.mean(other_means))


def _record_eval_metrics(log: RunLog, run: RunState, row_k: int, hp: Hyperparams,
                         game: GameKind, grid: GridSpec,
                         exploitability_every: int, exploitability_loops: int) -> None:
    """Exploitability (on its cadence) and policy divergence for one row."""
    if exploitability_every > 0 and row_k % exploitability_every == 0:
        value = run_exploitability_probe(
            run, exploitability_loops, hp, game, grid,
            probe_seed=(run.trial_seed, _PROBE_DOMAIN, row_k))
        log.record(row_k, "exploitability", value)
    log.record(row_k, "policy_divergence", policy_divergence(run.policies))


def _run(hp: Hyperparams, game: GameKind, grid: GridSpec, algorithm: str,
         sigma_mode: str, exploitability_every: int,
         exploitability_loops: int) -> RunLog:
    log = RunLog(trial_seed=hp.seed)
    run = init_run_state(hp, grid)
    failure_rng = _failure_rng(hp.seed)
    tau_schedule = _tau_schedule_of(hp)
    beta_schedule = _beta_schedule_of(hp)
    centralised = hp.architecture == "centralised"

    _record_eval_metrics(log, run, 0, hp, game, grid,
                         exploitability_every, exploitability_loops)
    for k in range(hp.K):
        if hp.population_add is not None and k == hp.population_add[0]:
            population_add_event(run, hp.population_add[1], grid, hp)
        learners = np.array([0]) if centralised else np.arange(run.n_agents)
        run.qtables[learners] = q_max(hp.gamma, hp.lam, N_ACTIONS)
        for i in learners:
            run.buffers[int(i)].clear()

        returns = _sampling_phase(run, hp, game, grid, learners, algorithm,
                                  beta_schedule)
        if algorithm == "replay":
            _replay_phase(run, hp, learners)

        skip = inject_update_failure(k, hp.fail_prob, failure_rng, len(learners))
        for idx, i in enumerate(learners):
            if not skip[idx]:
                i = int(i)
                run.policies[i] = pma_update(run.qtables[i], run.policies[i],
                                             hp.eta, hp.lam)
        if centralised:
            pushed = run.policies[0]
            run.policies = [pushed.copy() for _ in range(run.n_agents)]

        if algorithm == "replay" or sigma_mode == "return":
            run.sigmas = evaluate_sigma(run, hp.E, hp.gamma, hp.lam, game, grid)
        else:
            run.sigmas = np.arange(run.n_agents, dtype=float)

        if hp.architecture == "networked":
            _communication_phase(run, hp, game, grid, tau_at(tau_schedule, k))

        run.k = k + 1
        log.record(k + 1, "avg_return", average_return(returns))
        _record_eval_metrics(log, run, k + 1, hp, game, grid,
                             exploitability_every, exploitability_loops)
    return log


def run_theoretical(hp: Hyperparams, game: GameKind, grid: GridSpec, *,
                    sigma_mode: str = "index", exploitability_every: int = 2,
                    exploitability_loops: int = 40) -> RunLog:
    """K outer loops of the original nested algorithm: per-sample TD updates,
    mirror-ascent policy update, score generation, then communication.

    ``sigma_mode`` "index" tags each policy with the agent index (unique and
    policy-independent); "return" evaluates the discounted return over E live
    steps as in the replay variant.
    """
    if sigma_mode not in ("index", "return"):
        raise ValueError("sigma_mode must be index or return")
    return _run(hp, game, grid, "theoretical", sigma_mode,
                exploitability_every, exploitability_loops)


def run_replay(hp: Hyperparams, game: GameKind, grid: GridSpec, *,
               exploitability_every: int = 2,
               exploitability_loops: int = 40) -> RunLog:
    """Experience-replay variant: buffers filled while sampling, then L
    shuffled TD passes, mirror ascent, return-based scores, communication."""
    return _run(hp, game, grid, "replay", "return",
                exploitability_every, exploitability_loops)
