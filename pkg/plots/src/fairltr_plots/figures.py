"""Figure rendering for experiment CSVs.

timeseries: one panel per metric, one mean curve per experiment_id with a
+-1 std band from the aggregate rows.  sweep: final-checkpoint metric vs
swept value per experiment_id with std error bars.  Inputs are read-only;
the result carries their checksums so callers can verify nothing was
recomputed or rewritten.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .io import SchemaError, read_tables, series_by_experiment, sweep_points

METRIC_LABELS = {
    "ndcg_cum": "cumulative NDCG",
    "unfair_exposure": "exposure unfairness",
    "unfair_impact": "impact unfairness",
}


@dataclass
class PlotSpec:
    csv_paths: list
    kind: str  # "timeseries" | "sweep"
    metrics: list
    out: str
    title: str | None = None
    group_by: str = "experiment_id"


@dataclass
class PlotResult:
    output_path: str
    input_checksums: dict
    figure: object = field(repr=False, default=None)


def _resolve_out(spec: PlotSpec) -> str:
    root, ext = os.path.splitext(spec.out)
    if ext.lower() in (".svg", ".pdf", ".png"):
        return spec.out
    # vector output by default; name derives from kind + metrics
    return f"{root}_{spec.kind}_{'_'.join(spec.metrics)}.svg"


def plot_timeseries(spec: PlotSpec) -> PlotResult:
    tables = read_tables(spec.csv_paths)
    if not any(table.aggregate_rows("mean") for table in tables):
        raise SchemaError("CSV has no aggregate rows (trial == 'mean')")
    fig, axes = plt.subplots(
        1, len(spec.metrics), figsize=(5.2 * len(spec.metrics), 3.6), squeeze=False
    )
    for ax, metric in zip(axes[0], spec.metrics):
        means = series_by_experiment(tables, metric, "mean")
        stds = series_by_experiment(tables, metric, "std")
        for experiment, points in sorted(means.items()):
            steps = [s for s, _ in points]
            values = [v for _, v in points]
            (line,) = ax.plot(steps, values, label=experiment)
            spread = dict(stds.get(experiment, []))
            if spread:
                low = [v - spread.get(s, 0.0) for s, v in points]
                high = [v + spread.get(s, 0.0) for s, v in points]
                ax.fill_between(steps, low, high, alpha=0.2, color=line.get_color())
        ax.set_xlabel("users")
        ax.set_ylabel(METRIC_LABELS.get(metric, metric))
        ax.legend(fontsize=8)
    if spec.title:
        fig.suptitle(spec.title)
    out = _resolve_out(spec)
    fig.tight_layout()
    fig.savefig(out)
    plt.close(fig)
    return PlotResult(
        output_path=out,
        input_checksums={p: t.checksum for p, t in zip(spec.csv_paths, tables)},
        figure=fig,
    )


def plot_sweep(spec: PlotSpec) -> PlotResult:
    tables = read_tables(spec.csv_paths)
    fig, axes = plt.subplots(
        1, len(spec.metrics), figsize=(5.2 * len(spec.metrics), 3.6), squeeze=False
    )
    for ax, metric in zip(axes[0], spec.metrics):
        means = sweep_points(tables, metric, "mean")
        stds = sweep_points(tables, metric, "std")
        if not means:
            raise SchemaError("no sweep rows found (sweep_value column is empty)")
        for experiment, points in sorted(means.items()):
            xs = [x for x, _ in points]
            ys = [y for _, y in points]
            errs = [e for _, e in stds.get(experiment, [])] or None
            ax.errorbar(xs, ys, yerr=errs, marker="o", capsize=3, label=experiment)
        ax.set_xlabel("swept value")
        ax.set_ylabel(METRIC_LABELS.get(metric, metric))
        ax.set_xticks(sorted({x for pts in means.values() for x, _ in pts}))
        ax.legend(fontsize=8)
    if spec.title:
        fig.suptitle(spec.title)
    out = _resolve_out(spec)
    fig.tight_layout()
    fig.savefig(out)
    plt.close(fig)
    return PlotResult(
        output_path=out,
        input_checksums={p: t.checksum for p, t in zip(spec.csv_paths, tables)},
        figure=fig,
    )
