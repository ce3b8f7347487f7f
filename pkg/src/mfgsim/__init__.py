"""Deterministic N-agent simulator for stationary mean-field games learned
along a single non-episodic run, with centralised, independent and
networked-communication architectures."""

from .comms import (AnnealedTau, CommGraph, FixedTau, MaxTau, build_graph,
                    communication_round, f_of, graph_diameter, max_adopt,
                    neighbourhood, softmax_adopt, tau_at)
from .config import (ConfigError, ExperimentConfig, config_digest,
                     parse_config, serialise_config)
from .core import (Action, EmpiricalDistribution, GridSpec, Hyperparams,
                   Transition, empirical_distribution, entropy_h, q_max,
                   uniform_policy)
from .environment import (Cluster, GameKind, StepResult, TargetAgreement,
                          default_targets, env_step_all, reward_normalise,
                          reward_raw, step_dynamics)
from .learning import (FixedBeta, ReplayBuffer, TheoreticalBeta, beta_at,
                       buffer_push, buffer_replay, pma_objective, pma_update,
                       project_simplex, t0_of, td_update)
from .metrics import (RunLog, aggregate_trials, average_return,
                      exploitability_approx, policy_divergence)
from .orchestrator import (RunState, evaluate_sigma, init_run_state,
                           inject_update_failure, population_add_event,
                           run_exploitability_probe, run_replay,
                           run_theoretical)

__version__ = "0.1.0"
