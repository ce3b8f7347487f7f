"""Command line: render the three-panel figure from a sweep manifest.

    mfgsim-figures render --manifest <sweep>/manifest.json --out figure.png

The manifest lists variants as {"label", "aggregate_csv", ...}; aggregate
CSV paths are resolved relative to the manifest's directory. Any schema
violation exits nonzero with a message on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .render import FigureSpec, SchemaError, VariantSeries, render_figure


def spec_from_manifest(manifest_path, out_path) -> FigureSpec:
    manifest_path = Path(manifest_path)
    try:
        payload = json.loads(manifest_path.read_text())
        variants = payload["variants"]
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise SchemaError(f"{manifest_path}: bad manifest: {exc}") from None
    series = []
    for entry in variants:
        try:
            label = entry["label"]
            csv_rel = entry["aggregate_csv"]
        except (TypeError, KeyError):
            raise SchemaError(f"{manifest_path}: variant entries need "
                              f"'label' and 'aggregate_csv'") from None
        series.append(VariantSeries(label=label,
                                    csv_path=str(manifest_path.parent / csv_rel),
                                    colour=entry.get("colour")))
    return FigureSpec(variants=series, out_path=str(out_path))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="mfgsim-figures")
    sub = parser.add_subparsers(dest="command", required=True)
    p_render = sub.add_parser("render", help="render a manifest's aggregates")
    p_render.add_argument("--manifest", required=True)
    p_render.add_argument("--out", required=True)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        spec = spec_from_manifest(args.manifest, args.out)
        path = render_figure(spec)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
