"""Bit-exact file formats for metric logs, aggregates and sweep manifests.

Trial CSV schema:      k,metric,value
Aggregate CSV schema:  k,metric,mean,std,n_trials

Floating-point columns carry 17 significant digits so the written decimals
reproduce the binary doubles exactly; line endings are LF.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import List, Sequence, Tuple

from .metrics import METRIC_NAMES, RunLog

TRIAL_HEADER = "k,metric,value"
AGGREGATE_HEADER = "k,metric,mean,std,n_trials"


def format_float(x: float) -> str:
    return f"{x:.17g}"


def trial_csv_name(seed: int) -> str:
    return f"trial_{seed}.csv"


def write_trial_csv(path, log: RunLog) -> None:
    lines = [TRIAL_HEADER]
    for k, metric, value in sorted(log.rows, key=lambda r: (r[0], r[1])):
        lines.append(f"{k},{metric},{format_float(value)}")
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def read_trial_csv(path, trial_seed: int = -1, config_digest: str = "") -> RunLog:
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines or lines[0] != TRIAL_HEADER:
        raise ValueError(f"{path}: bad trial CSV header")
    log = RunLog(trial_seed=trial_seed, config_digest=config_digest)
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected 3 columns")
        k, metric, value = parts
        if metric not in METRIC_NAMES:
            raise ValueError(f"{path}:{lineno}: unknown metric {metric!r}")
        log.record(int(k), metric, float(value))
    return log


def write_aggregate_csv(path, rows: Sequence[Tuple[int, str, float, float, int]]) -> None:
    lines = [AGGREGATE_HEADER]
    for k, metric, mean, std, n_trials in rows:
        lines.append(f"{k},{metric},{format_float(mean)},{format_float(std)},{n_trials}")
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def read_aggregate_csv(path) -> List[Tuple[int, str, float, float, int]]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != AGGREGATE_HEADER:
        raise ValueError(f"{path}: bad aggregate CSV header")
    out = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 5:
            raise ValueError(f"{path}:{lineno}: expected 5 columns")
        out.append((int(parts[0]), parts[1], float(parts[2]), float(parts[3]),
                    int(parts[4])))
    return out


def write_manifest(path, variants: Sequence[dict]) -> None:
    """Sweep manifest: one entry per variant with its label, directory,
    config digest and aggregate CSV path (paths relative to the manifest)."""
    payload = {"variants": list(variants)}
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", newline="\n")


def read_manifest(path) -> List[dict]:
    payload = json.loads(Path(path).read_text())
    return payload["variants"]
