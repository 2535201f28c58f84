"""Loading, splitting, and windowing of univariate time series.

All values are float64 and finite; loaders fail loudly instead of
skipping or imputing. Split and window boundaries are deterministic
functions of lengths, so every downstream run is reproducible.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import datetime
from typing import Optional, Sequence, Union

import numpy as np

from .errors import (
    ColumnNotFoundError,
    CsvParseError,
    EmptyInputError,
    EmptySeriesError,
    InvalidHorizonError,
    SeriesTooShortError,
)

__all__ = [
    "TimeSeries",
    "SplitSpec",
    "WindowPair",
    "SeriesStats",
    "load_csv",
    "chronological_split",
    "make_windows",
    "series_stats",
]


def _frozen_array(values: Sequence[float]) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64).copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class TimeSeries:
    """An immutable univariate series with an optional time index."""

    values: np.ndarray
    name: str = "series"
    timestamps: Optional[tuple] = None

    def __post_init__(self):
        arr = _frozen_array(self.values)
        object.__setattr__(self, "values", arr)
        if arr.ndim != 1:
            raise ValueError(f"series values must be 1-dimensional, got shape {arr.shape}")
        if arr.size == 0:
            raise EmptySeriesError(f"series {self.name!r} has no values")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"series {self.name!r} contains non-finite values")
        if self.timestamps is not None:
            ts = tuple(self.timestamps)
            if len(ts) != arr.size:
                raise ValueError(
                    f"series {self.name!r}: {len(ts)} timestamps for {arr.size} values"
                )
            for a, b in zip(ts, ts[1:]):
                if not a < b:
                    raise ValueError(f"series {self.name!r}: timestamps not strictly increasing")
            object.__setattr__(self, "timestamps", ts)

    def __len__(self) -> int:
        return int(self.values.size)

    def slice(self, start: int, stop: int, name: Optional[str] = None) -> "TimeSeries":
        """Return the contiguous sub-series [start, stop)."""
        ts = self.timestamps[start:stop] if self.timestamps is not None else None
        return TimeSeries(self.values[start:stop], name or self.name, ts)


@dataclass(frozen=True)
class SplitSpec:
    """Chronological train/validation/test fractions. Must sum to 1."""

    train: float = 0.5
    validation: float = 0.25
    test: float = 0.25

    def __post_init__(self):
        for part, value in (("train", self.train), ("validation", self.validation), ("test", self.test)):
            if not (0.0 < value < 1.0):
                raise ValueError(f"split fraction {part}={value} must be in (0, 1)")
        total = self.train + self.validation + self.test
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"split fractions sum to {total}, expected 1")


@dataclass(frozen=True)
class WindowPair:
    """One evaluation slot: the input window and the truth that follows it.

    `truth` exists for scoring only. Attack code never receives it.
    """

    history: np.ndarray
    truth: np.ndarray
    origin_index: int

    def __post_init__(self):
        history = _frozen_array(self.history)
        truth = _frozen_array(self.truth)
        object.__setattr__(self, "history", history)
        object.__setattr__(self, "truth", truth)
        if history.size == 0 or truth.size == 0:
            raise EmptyInputError("window history and truth must be non-empty")
        if truth.size > history.size:
            raise InvalidHorizonError(
                f"truth length {truth.size} exceeds history length {history.size}"
            )
        if self.origin_index < 0:
            raise ValueError(f"origin_index must be >= 0, got {self.origin_index}")


@dataclass(frozen=True)
class SeriesStats:
    """Population summary statistics of a value sequence."""

    mean: float
    std: float
    minimum: float
    maximum: float
    count: int


def series_stats(values: Sequence[float]) -> SeriesStats:
    """Population (1/n) statistics of `values`. Fails on empty or non-finite input."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise EmptyInputError("cannot compute statistics of an empty sequence")
    if not np.all(np.isfinite(arr)):
        raise ValueError("cannot compute statistics over non-finite values")
    return SeriesStats(
        mean=float(arr.mean()),
        std=float(arr.std()),  # population convention, ddof=0
        minimum=float(arr.min()),
        maximum=float(arr.max()),
        count=int(arr.size),
    )


def _parse_timestamp(text: str):
    """Parse an instant as ISO date/datetime, falling back to a float."""
    raw = text.strip()
    try:
        return datetime.fromisoformat(raw)
    except ValueError:
        return float(raw)


def load_csv(
    path: str,
    column: Union[str, int],
    timestamp_column: Union[str, int, None] = None,
    name: Optional[str] = None,
) -> TimeSeries:
    """Load one numeric column of a headered CSV file as a TimeSeries.

    `column` selects by header name or 0-based position. Every data cell in
    the selected column must parse as a finite float; the first offending
    cell raises CsvParseError carrying its 1-based data row index. An empty
    body raises EmptySeriesError. Missing files raise FileNotFoundError.
    """
    with open(path, "r", newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptySeriesError(f"{path}: file is empty") from None

        def resolve(selector: Union[str, int], what: str) -> int:
            if isinstance(selector, int) or (isinstance(selector, str) and selector not in header):
                try:
                    index = int(selector)
                except (TypeError, ValueError):
                    raise ColumnNotFoundError(
                        f"{path}: no column {selector!r} among {header}"
                    ) from None
                if not (0 <= index < len(header)):
                    raise ColumnNotFoundError(
                        f"{path}: {what} index {index} out of range for {len(header)} columns"
                    )
                return index
            return header.index(selector)

        value_at = resolve(column, "column")
        time_at = resolve(timestamp_column, "timestamp column") if timestamp_column is not None else None

        values = []
        timestamps = [] if time_at is not None else None
        row_index = 0
        for row in reader:
            if not row:  # a blank line carries no cells; tolerate trailing newline
                continue
            row_index += 1
            if len(row) <= value_at or (time_at is not None and len(row) <= time_at):
                raise CsvParseError(
                    f"{path}: row {row_index} has {len(row)} fields, expected {len(header)}",
                    row=row_index,
                )
            cell = row[value_at]
            try:
                value = float(cell)
            except ValueError:
                raise CsvParseError(
                    f"{path}: row {row_index}: {cell!r} is not a number", row=row_index
                ) from None
            if not math.isfinite(value):
                raise CsvParseError(
                    f"{path}: row {row_index}: {cell!r} is not finite", row=row_index
                )
            values.append(value)
            if timestamps is not None:
                try:
                    timestamps.append(_parse_timestamp(row[time_at]))
                except ValueError:
                    raise CsvParseError(
                        f"{path}: row {row_index}: bad timestamp {row[time_at]!r}",
                        row=row_index,
                    ) from None

        if not values:
            raise EmptySeriesError(f"{path}: column {column!r} has no data rows")

    series_name = name if name is not None else (header[value_at] or str(column))
    return TimeSeries(np.array(values), series_name, tuple(timestamps) if timestamps else None)


def chronological_split(
    series: TimeSeries, spec: SplitSpec = SplitSpec()
) -> tuple[TimeSeries, TimeSeries, TimeSeries]:
    """Split a series into contiguous train/validation/test parts, in time order.

    Train and validation take floor(n * fraction) points each; the test part
    absorbs the remainder, so the three parts always cover the whole series.
    """
    n = len(series)
    n_train = int(math.floor(n * spec.train + 1e-9))
    n_val = int(math.floor(n * spec.validation + 1e-9))
    n_test = n - n_train - n_val
    if min(n_train, n_val, n_test) < 1:
        raise SeriesTooShortError(
            f"series of length {n} cannot be split into non-empty parts with {spec}"
        )
    train = series.slice(0, n_train, f"{series.name}/train")
    validation = series.slice(n_train, n_train + n_val, f"{series.name}/validation")
    test = series.slice(n_train + n_val, n, f"{series.name}/test")
    return train, validation, test


def make_windows(
    series: TimeSeries,
    history_len: int,
    horizon: int,
    stride: Optional[int] = None,
) -> list[WindowPair]:
    """Cut a series into (history, truth) pairs at origins 0, stride, 2*stride, ...

    A window at origin o uses values[o : o+history_len] as input and
    values[o+history_len : o+history_len+horizon] as truth; origins advance
    while the full pair still fits. The default stride equals the horizon,
    which tiles the truth segments edge to edge without overlap.
    """
    if history_len < 1:
        raise ValueError(f"history_len must be >= 1, got {history_len}")
    if horizon < 1 or horizon > history_len:
        raise InvalidHorizonError(
            f"horizon must be in [1, history_len={history_len}], got {horizon}"
        )
    if stride is None:
        stride = horizon
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")

    n = len(series)
    span = history_len + horizon
    if span > n:
        raise SeriesTooShortError(
            f"series of length {n} is shorter than one window of {span} points"
        )
    windows = []
    for origin in range(0, n - span + 1, stride):
        windows.append(
            WindowPair(
                history=series.values[origin : origin + history_len],
                truth=series.values[origin + history_len : origin + span],
                origin_index=origin,
            )
        )
    return windows
