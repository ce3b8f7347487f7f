"""Experiment configuration: flat ``key = value`` text files, validation with
line numbers, canonical serialisation and a stable digest.

The digest is the sha256 of the canonically serialised config with the
``output_dir`` line removed (where results land is not part of what was
run). Two runs aggregate together only when their digests match.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from .core import GridSpec, Hyperparams
from .environment import Cluster, GameKind, TargetAgreement, default_targets

ENV_OUTPUT_ROOT = "MFGSIM_OUTPUT_ROOT"

GAMES = ("cluster", "target_agreement")
ARCHITECTURES = ("networked", "centralised", "independent")
TAU_MODES = ("annealed", "fixed", "max")
BETA_MODES = ("fixed", "theoretical")
ALGORITHMS = ("replay", "theoretical")


class ConfigError(ValueError):
    """Parse or validation failure, carrying the offending line number."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass
class ExperimentConfig:
    """Resolved experiment description; defaults follow the reference
    hyperparameter table (8x8 grid, 250 agents, K=200, M_pg=500, M_td=1,
    C=1, L=100, E=100, gamma=0.9, beta=0.1, eta=0.01, lambda=0, annealed
    tau, 10 trials)."""

    game: str = "cluster"
    grid_width: int = 8
    grid_height: int = 8
    targets: Optional[Tuple[int, ...]] = None   # resolved to grid corners
    n_agents: int = 250
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
    tau_schedule: str = "annealed"
    tau_fixed_value: float = 100.0
    beta_schedule: str = "fixed"
    p_inf: float = 1.0
    delta_mix: float = 1.0
    broadcast_radius_fraction: float = 1.0
    architecture: str = "networked"
    fail_prob: float = 0.0
    population_add: Optional[Tuple[int, int]] = None
    algorithm: str = "replay"
    trials: int = 10
    base_seed: int = 0
    exploitability_every: int = 2
    exploitability_loops: int = 40
    output_dir: str = ""

    def __post_init__(self):
        if self.grid_width < 1:
            raise ValueError("grid_width must be >= 1")
        if self.grid_height < 1:
            raise ValueError("grid_height must be >= 1")
        if not self.output_dir:
            self.output_dir = os.environ.get(ENV_OUTPUT_ROOT, "runs")
        if self.targets is None:
            self.targets = default_targets(self.grid())

    def grid(self) -> GridSpec:
        return GridSpec(self.grid_width, self.grid_height)

    def game_kind(self) -> GameKind:
        if self.game == "cluster":
            return Cluster()
        return TargetAgreement(tuple(self.targets))

    def hyperparams(self, trial_seed: int) -> Hyperparams:
        return Hyperparams(
            K=self.K, M_pg=self.M_pg, M_td=self.M_td, C=self.C, L=self.L,
            E=self.E, gamma=self.gamma, beta=self.beta, eta=self.eta,
            lam=self.lam, tau_mode=self.tau_schedule,
            tau_fixed_value=self.tau_fixed_value, beta_mode=self.beta_schedule,
            p_inf=self.p_inf, delta_mix=self.delta_mix, n_agents=self.n_agents,
            broadcast_radius_fraction=self.broadcast_radius_fraction,
            architecture=self.architecture, fail_prob=self.fail_prob,
            population_add=self.population_add, seed=trial_seed)

    def trial_seeds(self):
        return [self.base_seed + i for i in range(self.trials)]


def _parse_int(raw: str) -> int:
    return int(raw, 10)


def _parse_float(raw: str) -> float:
    return float(raw)


def _parse_choice(options):
    def parse(raw: str) -> str:
        if raw not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return raw
    return parse


def _parse_targets(raw: str) -> Tuple[int, ...]:
    return tuple(int(part, 10) for part in raw.split(","))


def _parse_population_add(raw: str) -> Optional[Tuple[int, int]]:
    if raw == "none":
        return None
    k_add, _, n_add = raw.partition(":")
    if not _:
        raise ValueError("expected 'k:n' or 'none'")
    return int(k_add, 10), int(n_add, 10)


# key -> (attribute, parser)
_KEY_TABLE = {
    "game": ("game", _parse_choice(GAMES)),
    "grid_width": ("grid_width", _parse_int),
    "grid_height": ("grid_height", _parse_int),
    "targets": ("targets", _parse_targets),
    "n_agents": ("n_agents", _parse_int),
    "K": ("K", _parse_int),
    "M_pg": ("M_pg", _parse_int),
    "M_td": ("M_td", _parse_int),
    "C": ("C", _parse_int),
    "L": ("L", _parse_int),
    "E": ("E", _parse_int),
    "gamma": ("gamma", _parse_float),
    "beta": ("beta", _parse_float),
    "eta": ("eta", _parse_float),
    "lambda": ("lam", _parse_float),
    "tau_schedule": ("tau_schedule", _parse_choice(TAU_MODES)),
    "tau_fixed_value": ("tau_fixed_value", _parse_float),
    "beta_schedule": ("beta_schedule", _parse_choice(BETA_MODES)),
    "p_inf": ("p_inf", _parse_float),
    "delta_mix": ("delta_mix", _parse_float),
    "broadcast_radius_fraction": ("broadcast_radius_fraction", _parse_float),
    "architecture": ("architecture", _parse_choice(ARCHITECTURES)),
    "fail_prob": ("fail_prob", _parse_float),
    "population_add": ("population_add", _parse_population_add),
    "algorithm": ("algorithm", _parse_choice(ALGORITHMS)),
    "trials": ("trials", _parse_int),
    "base_seed": ("base_seed", _parse_int),
    "exploitability_every": ("exploitability_every", _parse_int),
    "exploitability_loops": ("exploitability_loops", _parse_int),
    "output_dir": ("output_dir", str),
}

_ATTR_TO_KEY = {attr: key for key, (attr, _) in _KEY_TABLE.items()}


def parse_config(text: str) -> ExperimentConfig:
    """Parse ``key = value`` lines (# starts a comment) into a resolved
    config; unknown keys, bad values and violated invariants are rejected
    with their line number."""
    values: Dict[str, object] = {}
    lines: Dict[str, int] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, raw_value = (part.strip() for part in line.partition("="))
        if not eq:
            raise ConfigError("expected 'key = value'", lineno)
        if key not in _KEY_TABLE:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in lines:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        attr, parser = _KEY_TABLE[key]
        try:
            values[attr] = parser(raw_value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", lineno) from None
        lines[key] = lineno
    try:
        cfg = ExperimentConfig(**values)
        _validate(cfg)
    except ValueError as exc:
        raise _locate(exc, lines) from None
    return cfg


def _locate(exc: ValueError, lines: Dict[str, int]) -> ConfigError:
    """Attach the source line of the key named in a validation message."""
    if isinstance(exc, ConfigError):
        return exc
    message = str(exc)
    for key in lines:
        attr = _KEY_TABLE[key][0]
        if key in message or attr in message:
            return ConfigError(message, lines[key])
    return ConfigError(message)


def _validate(cfg: ExperimentConfig) -> None:
    grid = cfg.grid()
    if cfg.trials < 1:
        raise ValueError("trials must be >= 1")
    if cfg.exploitability_every < 0:
        raise ValueError("exploitability_every must be >= 0")
    if cfg.exploitability_loops < 1:
        raise ValueError("exploitability_loops must be >= 1")
    for s in cfg.targets:
        if not 0 <= s < grid.n_states:
            raise ValueError("targets must be in-bounds state indices")
    if len(set(cfg.targets)) != len(cfg.targets):
        raise ValueError("targets must be distinct")
    # Hyperparams enforces the remaining ranges.
    cfg.hyperparams(cfg.base_seed)


def _format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if value is None:
        return "none"
    return str(value)


def serialise_config(cfg: ExperimentConfig) -> str:
    """Canonical text form: sorted ``key = value`` lines, floats via repr so
    parsing reproduces the exact doubles."""
    out = []
    for key in sorted(_KEY_TABLE):
        attr = _KEY_TABLE[key][0]
        value = getattr(cfg, attr)
        if key == "population_add" and value is not None:
            text = f"{value[0]}:{value[1]}"
        else:
            text = _format_value(value)
        out.append(f"{key} = {text}")
    return "\n".join(out) + "\n"


def config_digest(cfg: ExperimentConfig) -> str:
    """sha256 over the canonical serialisation, output_dir excluded."""
    lines = [line for line in serialise_config(cfg).splitlines()
             if not line.startswith("output_dir =")]
    return hashlib.sha256(("\n".join(lines) + "\n").encode()).hexdigest()
