import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mfgsim.core import Transition, entropy_h, uniform_policy
from mfgsim.learning import (FixedBeta, ReplayBuffer, TheoreticalBeta, beta_at,
                             buffer_push, buffer_replay, pma_objective,
                             pma_update, project_simplex, t0_of, td_update)


# ---------------------------------------------------------------------------
# TD operator
# ---------------------------------------------------------------------------

def test_td_zero_beta_is_identity():
    q = np.arange(6.0).reshape(2, 3)
    pi = uniform_policy(2, 3)
    out = td_update(q, Transition(0, 1, 0.5, 1, 2), pi, 0.0, 0.0, 0.9)
    assert np.array_equal(out, q)


def test_td_bellman_fixed_point_entry_unchanged():
    pi = uniform_policy(2, 2)
    lam, gamma = 0.5, 0.9
    h = entropy_h(pi[0], lam)
    q = np.zeros((2, 2))
    q[1, 1] = 2.0
    q[0, 0] = 0.7 + h + gamma * q[1, 1]
    out = td_update(q, Transition(0, 0, 0.7, 1, 1), pi, 0.3, lam, gamma)
    assert out[0, 0] == pytest.approx(q[0, 0], abs=1e-15)


def test_td_hand_example():
    # Q(s,a)=5, r=1, h=0, gamma=0.9, Q(s',a')=5, beta=0.1 -> 5.05
    q = np.full((2, 2), 5.0)
    out = td_update(q, Transition(0, 0, 1.0, 1, 1), uniform_policy(2, 2), 0.1, 0.0, 0.9)
    assert out[0, 0] == pytest.approx(5.05, abs=1e-12)
    assert out[0, 1] == 5.0 and out[1, 0] == 5.0


@given(st.floats(0.01, 1.0), st.floats(-3, 3), st.floats(0, 1), st.floats(-3, 3))
def test_td_contracts_towards_target(beta, q0, r, qn):
    q = np.array([[q0, 0.0], [qn, 0.0]])
    zeta = Transition(0, 0, r, 1, 0)
    target = r + 0.9 * qn
    out = td_update(q, zeta, uniform_policy(2, 2), beta, 0.0, 0.9)
    assert abs(out[0, 0] - target) == pytest.approx((1 - beta) * abs(q0 - target), abs=1e-9)


def test_td_sweeps_match_direct_bellman_solve():
    """Frozen policy, frozen rewards: repeated sweeps must reach the exact
    solution of the linear regularised Bellman system within 1e-6.

    Construction keeps the SARSA bootstrap deterministic: rewards and
    transitions are action-independent, so both Q columns equal the state
    value V solving V = r + h + gamma * V[next].
    """
    gamma, lam, beta = 0.9, 0.5, 0.5
    pi = np.array([[0.7, 0.3], [0.25, 0.75]])
    rewards = np.array([0.3, 0.8])
    nxt = np.array([1, 0])
    h = np.array([entropy_h(pi[s], lam) for s in range(2)])
    # direct solve of (I - gamma P) V = r + h
    P = np.zeros((2, 2))
    P[0, nxt[0]] = 1.0
    P[1, nxt[1]] = 1.0
    v_exact = np.linalg.solve(np.eye(2) - gamma * P, rewards + h)

    q = np.full((2, 2), 10.0)
    for _ in range(400):
        for s in range(2):
            for a in range(2):
                zeta = Transition(s, a, rewards[s], int(nxt[s]), 0)
                q = td_update(q, zeta, pi, beta, lam, gamma)
    assert np.max(np.abs(q - v_exact[:, None])) < 1e-6


# ---------------------------------------------------------------------------
# learning-rate schedules
# ---------------------------------------------------------------------------

def test_beta_schedules():
    assert beta_at(FixedBeta(0.1), 12345, 0.9) == 0.1
    t0 = t0_of(0.9, 1.0, 1.0)
    assert t0 == pytest.approx(5776.0, rel=1e-12)
    assert beta_at(TheoreticalBeta(t0), 0, 0.9) == pytest.approx(2 / (0.1 * 5775), rel=1e-9)
    values = [beta_at(TheoreticalBeta(t0), m, 0.9) for m in range(50)]
    assert all(b > a for a, b in zip(values[1:], values))  # strictly decreasing


def test_t0_examples():
    assert t0_of(0.0, 1.0, 1.0) == pytest.approx(16.0, rel=1e-12)
    assert t0_of(0.9, 1.0, 0.5) > t0_of(0.9, 1.0, 1.0)
    with pytest.raises(ValueError):
        t0_of(1.0, 1.0, 1.0)


# ---------------------------------------------------------------------------
# simplex projection / PMA
# ---------------------------------------------------------------------------

def test_project_simplex_basic():
    out = project_simplex(np.array([0.51, 0.50]))[0]
    assert np.allclose(out, [0.505, 0.495], atol=1e-12)
    out = project_simplex(np.array([5.0, -3.0, 0.0]))[0]
    assert out[0] == 1.0 and out[1] == 0.0 and out[2] == 0.0


@given(st.lists(st.floats(-10, 10), min_size=2, max_size=8))
def test_project_simplex_outputs_probability_vector(v):
    out = project_simplex(np.array(v))[0]
    assert np.all(out >= 0)
    assert out.sum() == pytest.approx(1.0, abs=1e-9)


def test_pma_objective_examples():
    pi_row = np.array([0.5, 0.5])
    assert pma_objective(pi_row, np.array([3.0, 1.0]), pi_row, 1.0, 0.0) == pytest.approx(2.0)
    assert pma_objective(pi_row, np.zeros(2), pi_row, 1.0, 0.0) == 0.0
    val = pma_objective(np.array([1.0, 0.0]), np.array([2.0, 0.0]), pi_row, 1.0, 0.0)
    assert val == pytest.approx(1.75, abs=1e-12)


def test_pma_constant_row_is_identity():
    pi = np.array([[0.2, 0.3, 0.5]])
    q = np.full((1, 3), 4.2)
    out = pma_update(q, pi, 0.5, 0.0)
    assert np.allclose(out, pi, atol=1e-12)


def test_pma_small_and_large_steps():
    pi = np.array([[0.5, 0.5]])
    q = np.array([[1.0, 0.0]])
    assert np.allclose(pma_update(q, pi, 0.01, 0.0), [[0.505, 0.495]], atol=1e-12)
    assert np.allclose(pma_update(q, pi, 1000.0, 0.0), [[1.0, 0.0]], atol=1e-9)


def test_pma_argmax_stable_under_constant_shift():
    rng = np.random.default_rng(11)
    q = rng.normal(size=(6, 5))
    pi = project_simplex(rng.random((6, 5)))
    out = pma_update(q, pi, 0.3, 0.0)
    out_shifted = pma_update(q + 7.5, pi, 0.3, 0.0)
    assert np.allclose(out, out_shifted, atol=1e-10)


def test_pma_beats_random_simplex_points():
    rng = np.random.default_rng(5)
    for _ in range(10):
        q = rng.normal(size=5)
        pi = project_simplex(rng.random(5))[0]
        eta = float(rng.choice([0.01, 1.0, 1000.0]))
        star = pma_update(q[None, :], pi[None, :], eta, 0.0)[0]
        best = pma_objective(star, q, pi, eta, 0.0)
        samples = rng.dirichlet(np.ones(5), size=10_000)
        values = samples @ q - 0.5 / eta * np.sum((samples - pi) ** 2, axis=1)
        assert best >= values.max() - 1e-9


def _grid_search_3(q, pi, eta, lam, resolution=1e-3):
    """Dense grid over the 3-simplex; independent oracle for the PMA row
    problem."""
    steps = int(round(1 / resolution))
    best = -math.inf
    for i in range(steps + 1):
        for j in range(steps - i + 1):
            u = np.array([i, j, steps - i - j]) / steps
            val = pma_objective(u, q, pi, eta, lam)
            if val > best:
                best = val
    return best


def test_pma_matches_grid_search_small():
    rng = np.random.default_rng(17)
    for _ in range(3):
        q = rng.normal(size=3)
        pi = project_simplex(rng.random(3))[0]
        for eta in (0.01, 1.0, 1000.0):
            star = pma_update(q[None, :], pi[None, :], eta, 0.0)[0]
            achieved = pma_objective(star, q, pi, eta, 0.0)
            oracle = _grid_search_3(q, pi, eta, 0.0, resolution=5e-3)
            assert achieved >= oracle - 1e-9  # grid is a lower bound
            assert abs(achieved - oracle) < 1e-3


def _bisect_two_action(q, pi, eta, lam):
    """1-D oracle on the parameterisation u = (x, 1-x); the objective is
    strictly concave so the derivative has one sign change."""
    def grad(x):
        ent = -lam * math.log(x / (1 - x))
        prox = -((x - pi[0]) - (1 - x - pi[1])) / eta
        return (q[0] - q[1]) + ent + prox

    lo, hi = 1e-15, 1 - 1e-15
    if grad(lo) <= 0:
        return lo
    if grad(hi) >= 0:
        return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if grad(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_pma_entropy_solver_matches_bisection():
    rng = np.random.default_rng(23)
    for _ in range(25):
        q = rng.normal(size=2)
        pi = project_simplex(rng.random(2))[0]
        eta = float(rng.choice([0.01, 0.1, 1.0]))
        lam = float(rng.choice([0.01, 0.1, 1.0]))
        x_star = _bisect_two_action(q, pi, eta, lam)
        u_star = np.array([x_star, 1 - x_star])
        out = pma_update(q[None, :], pi[None, :], eta, lam)[0]
        assert np.max(np.abs(out - u_star)) < 1e-6
        gap = pma_objective(u_star, q, pi, eta, lam) - pma_objective(out, q, pi, eta, lam)
        assert gap < 1e-8


def test_pma_rows_are_probability_vectors():
    rng = np.random.default_rng(29)
    q = rng.normal(size=(10, 5)) * 10
    pi = project_simplex(rng.random((10, 5)))
    for lam in (0.0, 0.3):
        out = pma_update(q, pi, 0.05, lam)
        assert np.all(out >= 0)
        assert np.allclose(out.sum(axis=1), 1.0, atol=1e-9)


# ---------------------------------------------------------------------------
# replay buffer
# ---------------------------------------------------------------------------

def _zeta(i):
    return Transition(i % 2, i % 2, 0.1 * i, (i + 1) % 2, 0)


def test_buffer_push_append_semantics():
    buf = ReplayBuffer(3)
    buffer_push(buf, _zeta(0))
    assert len(buf) == 1
    buffer_push(buf, _zeta(1))
    buffer_push(buf, _zeta(2))
    assert buf.transitions == (_zeta(0), _zeta(1), _zeta(2))
    with pytest.raises(OverflowError):
        buffer_push(buf, _zeta(3))


def test_buffer_replay_zero_passes_is_identity():
    buf = ReplayBuffer(2)
    buf.push(_zeta(0))
    q = np.full((2, 2), 5.0)
    out = buffer_replay(buf, q, uniform_policy(2, 2), 0, 0.1, 0.0, 0.9,
                        np.random.default_rng(0))
    assert np.array_equal(out, q)


def test_buffer_replay_single_transition_equals_sequential_updates():
    buf = ReplayBuffer(1)
    zeta = _zeta(1)
    buf.push(zeta)
    pi = uniform_policy(2, 2)
    q = np.full((2, 2), 5.0)
    replayed = buffer_replay(buf, q, pi, 4, 0.1, 0.0, 0.9, np.random.default_rng(0))
    manual = q
    for _ in range(4):
        manual = td_update(manual, zeta, pi, 0.1, 0.0, 0.9)
    assert np.array_equal(replayed, manual)


def test_buffer_replay_deterministic_under_seed():
    buf = ReplayBuffer(8)
    for i in range(8):
        buf.push(_zeta(i))
    pi = uniform_policy(2, 2)
    q = np.full((2, 2), 5.0)
    a = buffer_replay(buf, q, pi, 5, 0.1, 0.0, 0.9, np.random.default_rng(42))
    b = buffer_replay(buf, q, pi, 5, 0.1, 0.0, 0.9, np.random.default_rng(42))
    assert np.array_equal(a, b)
