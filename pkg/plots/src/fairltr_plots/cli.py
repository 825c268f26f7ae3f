"""CLI: render figures from experiment CSVs.

  fairltr-plot timeseries --csv run_a.csv,run_b.csv \
      --metric ndcg_cum,unfair_impact --out figure1
  fairltr-plot sweep --csv lambda_sweep.csv --metric unfair_impact --out fig_lambda
"""

from __future__ import annotations

import argparse
import sys

from .figures import PlotSpec, plot_sweep, plot_timeseries
from .io import SchemaError

VALID_METRICS = ("ndcg_cum", "unfair_exposure", "unfair_impact")


def _common_flags(parser):
    parser.add_argument("--csv", required=True, help="comma-separated CSV paths")
    parser.add_argument("--metric", required=True,
                        help=f"comma-separated subset of {'|'.join(VALID_METRICS)}")
    parser.add_argument("--out", required=True)
    parser.add_argument("--title", default=None)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fairltr-plot")
    sub = parser.add_subparsers(dest="kind", required=True)
    _common_flags(sub.add_parser("timeseries", help="mean curves with std bands"))
    _common_flags(sub.add_parser("sweep", help="final metric vs swept value"))
    args = parser.parse_args(argv)

    metrics = [m.strip() for m in args.metric.split(",") if m.strip()]
    for metric in metrics:
        if metric not in VALID_METRICS:
            sys.stderr.write(f"error: unknown metric {metric!r}\n")
            return 2
    spec = PlotSpec(
        csv_paths=[p.strip() for p in args.csv.split(",") if p.strip()],
        kind=args.kind,
        metrics=metrics,
        out=args.out,
        title=args.title,
    )
    try:
        result = plot_timeseries(spec) if args.kind == "timeseries" else plot_sweep(spec)
    except (SchemaError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    print(result.output_path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
