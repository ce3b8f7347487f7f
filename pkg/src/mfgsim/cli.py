"""Command-line entry points.

    mfgsim run --config exp.cfg [--trials N] [--seed S]
    mfgsim sweep --config exp.cfg --vary key=v1,v2 [--also key=v1,v2] ...
    mfgsim aggregate --dir <run directory>

``run`` executes ``trials`` runs with seeds base_seed .. base_seed+trials-1,
writing one trial CSV per run, an aggregate CSV and a copy of the resolved
config. ``sweep`` repeats that for every variant of the varied keys and
writes a manifest. Reruns with identical config and seed are byte-identical.
"""

from __future__ import annotations

import argparse
import re
import sys
from dataclasses import replace
from pathlib import Path

from .config import (ConfigError, ExperimentConfig, _KEY_TABLE, config_digest,
                     parse_config, serialise_config)
from .metrics import aggregate_trials
from .orchestrator import run_replay, run_theoretical
from .runio import (read_trial_csv, trial_csv_name, write_aggregate_csv,
                    write_manifest, write_trial_csv)

CONFIG_COPY_NAME = "config.txt"
AGGREGATE_NAME = "aggregate.csv"
MANIFEST_NAME = "manifest.json"


def run_single_trial(cfg: ExperimentConfig, trial_seed: int):
    """One trial of the configured experiment, returning its RunLog."""
    hp = cfg.hyperparams(trial_seed)
    game = cfg.game_kind()
    grid = cfg.grid()
    kwargs = dict(exploitability_every=cfg.exploitability_every,
                  exploitability_loops=cfg.exploitability_loops)
    if cfg.algorithm == "theoretical":
        log = run_theoretical(hp, game, grid, **kwargs)
    else:
        log = run_replay(hp, game, grid, **kwargs)
    log.config_digest = config_digest(cfg)
    return log


def execute_run(cfg: ExperimentConfig, out_dir: Path) -> None:
    """Run all trials of ``cfg`` into ``out_dir`` and aggregate them."""
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / CONFIG_COPY_NAME).write_text(serialise_config(cfg), newline="\n")
    logs = []
    for seed in cfg.trial_seeds():
        log = run_single_trial(cfg, seed)
        write_trial_csv(out_dir / trial_csv_name(seed), log)
        print(f"wrote {out_dir / trial_csv_name(seed)}")
        logs.append(log)
    write_aggregate_csv(out_dir / AGGREGATE_NAME, aggregate_trials(logs))
    print(f"wrote {out_dir / AGGREGATE_NAME}")


def _load_config(path: str, trials, seed) -> ExperimentConfig:
    cfg = parse_config(Path(path).read_text())
    if trials is not None:
        cfg = replace(cfg, trials=trials)
    if seed is not None:
        cfg = replace(cfg, base_seed=seed)
    return cfg


def _cmd_run(args) -> int:
    cfg = _load_config(args.config, args.trials, args.seed)
    execute_run(cfg, Path(cfg.output_dir))
    return 0


def _parse_variant_spec(spec: str):
    key, eq, values = spec.partition("=")
    key = key.strip()
    if not eq or key not in _KEY_TABLE:
        raise ConfigError(f"bad variant spec {spec!r} (expected known_key=v1,v2,...)")
    return key, [v.strip() for v in values.split(",") if v.strip()]


def variant_label(overrides) -> str:
    """Legend-style label: broadcast radii appear as bare decimals and
    architectures as bare names, other overrides as key=value."""
    parts = []
    for key, value in overrides:
        if key in ("broadcast_radius_fraction", "architecture"):
            parts.append(value)
        else:
            parts.append(f"{key}={value}")
    return ",".join(parts)


def build_variants(vary_specs, also_specs):
    """Cross product over --vary keys, plus one baseline variant per --also
    value. Yields (label, override pairs)."""
    combos = [[]]
    for spec in vary_specs:
        key, values = _parse_variant_spec(spec)
        combos = [combo + [(key, v)] for combo in combos for v in values]
    variants = [(variant_label(combo), combo) for combo in combos if combo]
    if not variants:
        variants = [("base", [])]
    for spec in also_specs:
        key, values = _parse_variant_spec(spec)
        variants.extend((variant_label([(key, v)]), [(key, v)]) for v in values)
    return variants


def _apply_overrides(cfg: ExperimentConfig, overrides) -> ExperimentConfig:
    text = serialise_config(cfg)
    for key, value in overrides:
        pattern = re.compile(rf"^{re.escape(key)} = .*$", re.MULTILINE)
        text = pattern.sub(f"{key} = {value}", text)
    return parse_config(text)


def _cmd_sweep(args) -> int:
    cfg = _load_config(args.config, args.trials, args.seed)
    root = Path(cfg.output_dir)
    root.mkdir(parents=True, exist_ok=True)
    variants = build_variants(args.vary or [], args.also or [])
    manifest = []
    used_names = set()
    for label, overrides in variants:
        name = re.sub(r"[^A-Za-z0-9_.=-]+", "_", label) or "variant"
        while name in used_names:
            name += "_"
        used_names.add(name)
        vdir = root / name
        vcfg = _apply_overrides(cfg, overrides + [("output_dir", str(vdir))])
        execute_run(vcfg, vdir)
        manifest.append({"label": label, "dir": name,
                         "digest": config_digest(vcfg),
                         "aggregate_csv": f"{name}/{AGGREGATE_NAME}"})
    write_manifest(root / MANIFEST_NAME, manifest)
    print(f"wrote {root / MANIFEST_NAME}")
    return 0


def _cmd_aggregate(args) -> int:
    run_dir = Path(args.dir)
    cfg = parse_config((run_dir / CONFIG_COPY_NAME).read_text())
    digest = config_digest(cfg)
    logs = []
    for path in sorted(run_dir.glob("trial_*.csv")):
        seed = int(path.stem.split("_", 1)[1])
        logs.append(read_trial_csv(path, trial_seed=seed, config_digest=digest))
    if not logs:
        raise ConfigError(f"no trial CSVs in {run_dir}")
    write_aggregate_csv(run_dir / AGGREGATE_NAME, aggregate_trials(logs))
    print(f"wrote {run_dir / AGGREGATE_NAME}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mfgsim",
                                     description="mean-field game simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run all trials of one config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--trials", type=int, default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a grid of config variants")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--vary", action="append", default=[],
                         metavar="KEY=V1,V2,...")
    p_sweep.add_argument("--also", action="append", default=[],
                         metavar="KEY=V1,V2,...",
                         help="extra single-override baseline variants")
    p_sweep.add_argument("--trials", type=int, default=None)
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_agg = sub.add_parser("aggregate", help="recompute aggregate.csv")
    p_agg.add_argument("--dir", required=True)
    p_agg.set_defaults(func=_cmd_aggregate)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
