"""Render the three-panel learning-curve figure (exploitability, average
return, policy divergence against the outer iteration k) from aggregate
CSVs, one mean line with a translucent band of mean +- 2 * std per variant.

Rendering is a pure function of the CSV bytes and the figure spec; inputs
that violate the aggregate schema (`k,metric,mean,std,n_trials`) fail
loudly rather than being coerced.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

AGGREGATE_HEADER = "k,metric,mean,std,n_trials"
DEFAULT_PANELS = ("exploitability", "avg_return", "policy_divergence")
PANEL_TITLES = {
    "exploitability": "exploitability",
    "avg_return": "average return",
    "policy_divergence": "policy divergence",
}


class SchemaError(ValueError):
    """An input file does not conform to the aggregate CSV schema."""


@dataclass(frozen=True)
class VariantSeries:
    """One plotted variant: a legend label, its aggregate CSV, an optional
    colour hint (matplotlib colour spec)."""

    label: str
    csv_path: str
    colour: Optional[str] = None


@dataclass
class FigureSpec:
    variants: List[VariantSeries]
    out_path: str
    panels: Sequence[str] = DEFAULT_PANELS


Series = Dict[str, Tuple[List[int], List[float], List[float]]]


def read_aggregate(path) -> Series:
    """Parse one aggregate CSV into per-metric (ks, means, stds) series."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SchemaError(f"{path}: {exc}") from None
    lines = text.splitlines()
    if not lines or lines[0] != AGGREGATE_HEADER:
        raise SchemaError(f"{path}: expected header {AGGREGATE_HEADER!r}")
    if len(lines) < 2:
        raise SchemaError(f"{path}: no data rows")
    series: Series = {}
    last_k: Dict[str, int] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 5:
            raise SchemaError(f"{path}:{lineno}: expected 5 columns, got {len(parts)}")
        try:
            k = int(parts[0])
            mean = float(parts[2])
            std = float(parts[3])
            int(parts[4])
        except ValueError as exc:
            raise SchemaError(f"{path}:{lineno}: {exc}") from None
        metric = parts[1]
        if metric in last_k and k <= last_k[metric]:
            raise SchemaError(f"{path}:{lineno}: k not increasing for {metric!r}")
        last_k[metric] = k
        ks, means, stds = series.setdefault(metric, ([], [], []))
        ks.append(k)
        means.append(mean)
        stds.append(std)
    return series


def _align(per_variant: List[Series], metric: str):
    """Restrict every variant's series for ``metric`` to the shared k grid."""
    grids = [set(series[metric][0]) for series in per_variant if metric in series]
    if not grids:
        return None
    common = sorted(set.intersection(*grids))
    out = []
    for series in per_variant:
        if metric not in series:
            out.append(None)
            continue
        ks, means, stds = series[metric]
        index = {k: i for i, k in enumerate(ks)}
        rows = [index[k] for k in common]
        out.append((common, [means[i] for i in rows], [stds[i] for i in rows]))
    return out


def build_figure(spec: FigureSpec):
    """Assemble the matplotlib figure without writing it (testable core)."""
    if not spec.variants:
        raise SchemaError("figure spec lists no variants")
    data = [read_aggregate(v.csv_path) for v in spec.variants]
    fig, axes = plt.subplots(1, len(spec.panels), figsize=(4.2 * len(spec.panels), 3.4),
                             sharex=True)
    if len(spec.panels) == 1:
        axes = [axes]
    for axis, metric in zip(axes, spec.panels):
        aligned = _align(data, metric)
        for variant, series in zip(spec.variants, aligned or []):
            if series is None:
                continue
            ks, means, stds = series
            lo = [m - 2 * s for m, s in zip(means, stds)]
            hi = [m + 2 * s for m, s in zip(means, stds)]
            line, = axis.plot(ks, means, marker=".", markersize=3,
                              label=variant.label, color=variant.colour)
            axis.fill_between(ks, lo, hi, alpha=0.2, color=line.get_color())
        axis.set_title(PANEL_TITLES.get(metric, metric))
        axis.set_xlabel("k")
    axes[0].legend(fontsize="small")
    fig.tight_layout()
    return fig


def render_figure(spec: FigureSpec) -> str:
    """Render and write the figure; returns the output path."""
    fig = build_figure(spec)
    try:
        fig.savefig(spec.out_path, dpi=150)
    finally:
        plt.close(fig)
    return spec.out_path
