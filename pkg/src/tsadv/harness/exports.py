"""Analysis artifacts written from run results.

Run directory layout:

    plan.json        plan echo, exactly what was executed
    records.jsonl    one JSON object per window outcome (and per failure)
    table.csv        per-cell aggregates
    radar.csv        per (dataset, forecaster): gwn vs dga relative increase
    acf/*.csv        autocorrelation of concatenated per-cell predictions
    hist/*.csv       value histograms of per-cell predictions
    sweep.csv        budget sweep rows (sweep runs)

All files are plain text with LF newlines, floats in shortest-round-trip
form, and content that is a pure function of the plan: rerunning the same
plan reproduces every byte.
"""

from __future__ import annotations

import json
import os
import re
from typing import Sequence

import numpy as np

from ..errors import ConstantSeriesError, TooShortError
from ..metrics import acf, histogram
from .runner import MatrixResult

__all__ = ["export_analysis", "write_run_directory", "write_sweep_directory"]

TABLE_HEADER = "dataset,forecaster,variant,mse,mae,windows,norm_mae_increase"
SWEEP_HEADER = "dataset,forecaster,ratio,variant,mean_mae,norm_mae_increase"
RADAR_HEADER = "dataset,forecaster,gwn_increase,dga_increase"

_EXPORTS = ("table", "records", "acf", "histogram", "radar")


def _fmt(value) -> str:
    """Shortest round-trip text for numbers; plain str for the rest."""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _safe_name(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "-", text)


def _write_text(path: str, lines: Sequence[str]):
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for line in lines:
            handle.write(line)
            handle.write("\n")


def _plan_json_text(plan) -> str:
    return json.dumps(plan.to_json(), sort_keys=True, indent=2) + "\n"


def _record_lines(result: MatrixResult) -> list:
    lines = []
    for cell in result.cells:
        entries = [
            (
                r.origin,
                {
                    "dataset": r.dataset,
                    "forecaster": r.forecaster,
                    "variant": r.variant,
                    "origin": r.origin,
                    "mse": r.mse,
                    "mae": r.mae,
                    "queries": r.queries,
                    "seed": r.seed,
                    "epsilon": r.epsilon,
                },
            )
            for r in cell.records
        ]
        entries.extend(
            (
                f.origin,
                {
                    "dataset": f.dataset,
                    "forecaster": f.forecaster,
                    "variant": f.variant,
                    "origin": f.origin,
                    "error": f.error,
                    "message": f.message,
                },
            )
            for f in cell.failures
        )
        entries.sort(key=lambda item: item[0])
        lines.extend(json.dumps(doc, sort_keys=True) for _, doc in entries)
    return lines


def _table_lines(result: MatrixResult) -> list:
    lines = [TABLE_HEADER]
    for row in result.table():
        lines.append(
            ",".join(
                [
                    row.dataset,
                    row.forecaster,
                    row.variant,
                    _fmt(row.mse),
                    _fmt(row.mae),
                    str(row.windows),
                    _fmt(row.norm_mae_increase),
                ]
            )
        )
    return lines


def _radar_lines(result: MatrixResult) -> list:
    increases = {}
    order = []
    for row in result.table():
        key = (row.dataset, row.forecaster)
        if key not in increases:
            increases[key] = {}
            order.append(key)
        increases[key][row.variant] = row.norm_mae_increase
    lines = [RADAR_HEADER]
    for key in order:
        by_variant = increases[key]
        gwn = _fmt(by_variant["gwn"]) if "gwn" in by_variant else ""
        dga = _fmt(by_variant["dga"]) if "dga" in by_variant else ""
        lines.append(",".join([key[0], key[1], gwn, dga]))
    return lines


def _concatenated_predictions(cell) -> np.ndarray:
    parts = [cell.predictions[origin] for origin in sorted(cell.predictions)]
    if not parts:
        return np.empty(0)
    return np.concatenate(parts)


def _acf_lines(cell, max_lag: int) -> list:
    lines = ["lag,value"]
    joined = _concatenated_predictions(cell)
    if joined.size:
        try:
            curve = acf(joined, min(max_lag, joined.size - 1))
        except (ConstantSeriesError, TooShortError):
            return lines  # header-only file marks a degenerate cell
        lines.extend(f"{lag},{_fmt(value)}" for lag, value in curve.rows())
    return lines


def _hist_lines(cell, bins: int) -> list:
    lines = ["edge,count"]
    joined = _concatenated_predictions(cell)
    if joined.size:
        summary = histogram(joined, bins)
        lines.extend(f"{_fmt(edge)},{count}" for edge, count in summary.rows())
    return lines


def _sweep_lines(rows) -> list:
    lines = [SWEEP_HEADER]
    for row in rows:
        lines.append(
            ",".join(
                [
                    row.dataset,
                    row.forecaster,
                    _fmt(row.ratio),
                    row.variant,
                    _fmt(row.mean_mae),
                    _fmt(row.norm_mae_increase),
                ]
            )
        )
    return lines


def export_analysis(result: MatrixResult, out_dir: str, which: Sequence[str] = _EXPORTS):
    """Write the selected analysis files for a finished run."""
    unknown = set(which) - set(_EXPORTS)
    if unknown:
        raise ValueError(f"unknown exports {sorted(unknown)}; choose from {_EXPORTS}")
    os.makedirs(out_dir, exist_ok=True)
    if "table" in which:
        _write_text(os.path.join(out_dir, "table.csv"), _table_lines(result))
    if "records" in which:
        _write_text(os.path.join(out_dir, "records.jsonl"), _record_lines(result))
    if "radar" in which:
        _write_text(os.path.join(out_dir, "radar.csv"), _radar_lines(result))
    if "acf" in which:
        acf_dir = os.path.join(out_dir, "acf")
        os.makedirs(acf_dir, exist_ok=True)
        for cell in result.cells:
            name = _cell_file_name(cell)
            _write_text(
                os.path.join(acf_dir, name), _acf_lines(cell, result.plan.acf_max_lag)
            )
    if "histogram" in which:
        hist_dir = os.path.join(out_dir, "hist")
        os.makedirs(hist_dir, exist_ok=True)
        for cell in result.cells:
            name = _cell_file_name(cell)
            _write_text(
                os.path.join(hist_dir, name), _hist_lines(cell, result.plan.histogram_bins)
            )


def _cell_file_name(cell) -> str:
    return (
        "__".join(
            [_safe_name(cell.dataset), _safe_name(cell.forecaster), _safe_name(cell.variant)]
        )
        + ".csv"
    )


def write_run_directory(result: MatrixResult, out_dir: str):
    """Write the complete evaluation run directory (plan echo included)."""
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "plan.json"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_plan_json_text(result.plan))
    export_analysis(result, out_dir)


def write_sweep_directory(plan, rows, out_dir: str):
    """Write a sweep run directory: plan echo plus sweep.csv."""
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "plan.json"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_plan_json_text(plan))
    _write_text(os.path.join(out_dir, "sweep.csv"), _sweep_lines(rows))
