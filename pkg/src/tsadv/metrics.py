"""Forecast-quality metrics and distribution summaries.

Everything here is evaluation-side: these functions may see ground truth.
Attack code must not import from this module's truth-consuming helpers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConstantSeriesError,
    EmptyInputError,
    LengthMismatchError,
    TooShortError,
    ZeroBaselineError,
)

__all__ = [
    "mse",
    "mae",
    "normalized_mae_increase",
    "acf",
    "AcfCurve",
    "histogram",
    "HistogramSummary",
]


def _paired(prediction, truth) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(prediction, dtype=np.float64)
    t = np.asarray(truth, dtype=np.float64)
    if p.size == 0 or t.size == 0:
        raise EmptyInputError("metric inputs must be non-empty")
    if p.shape != t.shape:
        raise LengthMismatchError(f"prediction has shape {p.shape}, truth has shape {t.shape}")
    return p, t


def mse(prediction, truth) -> float:
    """Mean squared error between two equal-length sequences."""
    p, t = _paired(prediction, truth)
    return float(np.mean((p - t) ** 2))


def mae(prediction, truth) -> float:
    """Mean absolute error between two equal-length sequences."""
    p, t = _paired(prediction, truth)
    return float(np.mean(np.abs(p - t)))


def normalized_mae_increase(clean_mae: float, attacked_mae: float) -> float:
    """Relative MAE growth (attacked - clean) / clean."""
    if not clean_mae > 0:
        raise ZeroBaselineError(f"clean MAE must be positive, got {clean_mae}")
    return (attacked_mae - clean_mae) / clean_mae


@dataclass(frozen=True)
class AcfCurve:
    """Sample autocorrelations at lags 1..max_lag."""

    max_lag: int
    values: np.ndarray

    def value_at(self, lag: int) -> float:
        if not (1 <= lag <= self.max_lag):
            raise ValueError(f"lag must be in [1, {self.max_lag}], got {lag}")
        return float(self.values[lag - 1])

    def rows(self) -> list[tuple[int, float]]:
        """(lag, value) pairs, ready for CSV export."""
        return [(lag, float(v)) for lag, v in enumerate(self.values, start=1)]


def acf(values, max_lag: int) -> AcfCurve:
    """Biased-normalization sample autocorrelation.

    r_k = sum_{t}(x_t - xbar)(x_{t+k} - xbar) / sum_t (x_t - xbar)^2,
    which keeps every r_k in [-1, 1] and is invariant to shifting or
    (positively) scaling the input.
    """
    x = np.asarray(values, dtype=np.float64)
    if max_lag < 1:
        raise ValueError(f"max_lag must be >= 1, got {max_lag}")
    if x.size <= max_lag:
        raise TooShortError(f"need more than {max_lag} points for lag {max_lag}, got {x.size}")
    centered = x - x.mean()
    denom = float(np.dot(centered, centered))
    if denom == 0.0:
        raise ConstantSeriesError("autocorrelation of a constant series is undefined")
    out = np.empty(max_lag, dtype=np.float64)
    for k in range(1, max_lag + 1):
        out[k - 1] = float(np.dot(centered[:-k], centered[k:])) / denom
    return AcfCurve(max_lag=max_lag, values=out)


@dataclass(frozen=True)
class HistogramSummary:
    """Equal-width histogram over [min, max] with the top edge inclusive."""

    edges: np.ndarray
    counts: np.ndarray
    mean: float
    std: float

    def rows(self) -> list[tuple[float, object]]:
        """(edge, count) pairs; the final row carries the top edge alone."""
        rows: list[tuple[float, object]] = [
            (float(e), int(c)) for e, c in zip(self.edges[:-1], self.counts)
        ]
        rows.append((float(self.edges[-1]), ""))
        return rows


def histogram(values, bins: int) -> HistogramSummary:
    """Bin `values` into `bins` equal-width buckets spanning [min, max]."""
    x = np.asarray(values, dtype=np.float64)
    if x.size == 0:
        raise EmptyInputError("cannot histogram an empty sequence")
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    counts, edges = np.histogram(x, bins=bins)
    return HistogramSummary(
        edges=edges,
        counts=counts,
        mean=float(x.mean()),
        std=float(x.std()),
    )
