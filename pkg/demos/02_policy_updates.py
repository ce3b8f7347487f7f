"""The per-agent learning core in isolation: TD value estimation on SARSA
tuples, and the mirror-ascent policy update over the simplex.
"""

import numpy as np

from mfgsim import (ReplayBuffer, Transition, buffer_replay, pma_objective,
                    pma_update, q_max, td_update, uniform_policy)

gamma, lam = 0.9, 0.0

# --- TD updates move Q toward the bootstrapped SARSA target ----------------
q = np.full((2, 2), q_max(gamma, lam, 2))
pi = uniform_policy(2, 2)
zeta = Transition(s=0, a=1, r=0.8, s_next=1, a_next=0)
for step in range(5):
    q = td_update(q, zeta, pi, beta=0.5, lam=lam, gamma=gamma)
    print(f"after update {step + 1}: Q(0,1) = {q[0, 1]:.4f}")

# --- replaying a buffer amortises each costly environment sample ------------
buf = ReplayBuffer(capacity=4)
for r in (0.1, 0.9, 0.4, 0.7):
    buf.push(Transition(0, 0, r, 1, 1))
rng = np.random.default_rng(0)
q2 = buffer_replay(buf, np.full((2, 2), q_max(gamma, lam, 2)), pi,
                   L=25, beta=0.1, lam=lam, gamma=gamma, rng=rng)
print("\nQ after 25 shuffled passes over 4 samples:")
print(np.round(q2, 3))

# --- the policy update maximises value plus a proximity penalty -------------
q_row = np.array([[1.0, 0.0]])
pi_row = np.array([[0.5, 0.5]])
for eta in (0.01, 1.0, 1000.0):
    new = pma_update(q_row, pi_row, eta=eta, lam=0.0)[0]
    print(f"eta={eta:<7} new row = {np.round(new, 4)}  "
          f"objective = {pma_objective(new, q_row[0], pi_row[0], eta, 0.0):.4f}")
print("small steps stay near the old policy; large steps go greedy")
