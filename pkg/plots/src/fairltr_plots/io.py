"""Reading the experiment CSV schema.

Expected header: experiment_id, sweep_value, trial, step, metric columns.
Per-trial rows carry an integer trial id; aggregate rows carry trial
"mean" or "std".  This module never computes metrics, it only selects
rows; a sha256 of every input file is recorded so callers can assert the
figures are a pure view of unmodified inputs.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass


class SchemaError(ValueError):
    """The CSV does not carry a required column or row kind."""


@dataclass
class Table:
    columns: list
    rows: list  # list of dicts, strings as read
    checksum: str

    def require(self, column: str) -> None:
        if column not in self.columns:
            raise SchemaError(f"column {column!r} not in CSV header")

    def aggregate_rows(self, which: str) -> list:
        return [r for r in self.rows if r["trial"] == which]


def sha256_of(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        digest.update(fh.read())
    return digest.hexdigest()


def read_table(path) -> Table:
    checksum = sha256_of(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty CSV")
        rows = list(reader)
    for required in ("experiment_id", "sweep_value", "trial", "step"):
        if required not in reader.fieldnames:
            raise SchemaError(f"column {required!r} not in CSV header")
    return Table(columns=list(reader.fieldnames), rows=rows, checksum=checksum)


def read_tables(paths) -> list:
    return [read_table(p) for p in paths]


def merged_rows(tables) -> list:
    rows = []
    for table in tables:
        rows.extend(table.rows)
    return rows


def series_by_experiment(tables, metric: str, which: str = "mean"):
    """(experiment_id -> sorted [(step, value)]) from aggregate rows."""
    for table in tables:
        table.require(metric)
    series: dict = {}
    for row in merged_rows(tables):
        if row["trial"] != which:
            continue
        series.setdefault(row["experiment_id"], []).append(
            (int(row["step"]), float(row[metric]))
        )
    for points in series.values():
        points.sort()
    return series


def sweep_points(tables, metric: str, which: str = "mean"):
    """(experiment_id -> sorted [(sweep_value, final-step value)])."""
    for table in tables:
        table.require(metric)
    final: dict = {}
    for row in merged_rows(tables):
        if row["trial"] != which or row["sweep_value"] == "":
            continue
        key = (row["experiment_id"], float(row["sweep_value"]))
        step = int(row["step"])
        if key not in final or step > final[key][0]:
            final[key] = (step, float(row[metric]))
    points: dict = {}
    for (experiment, value), (_, metric_value) in final.items():
        points.setdefault(experiment, []).append((value, metric_value))
    for values in points.values():
        values.sort()
    return points
