"""The oracle contract every forecaster implements, plus query accounting.

A forecaster is an opaque function from (history, horizon) to a forecast
of exactly `horizon` finite values. Callers treat it as a black box; the
only thing an attacker may observe is predict() output, and every call
through a CountingForecaster is tallied against the query budget.
"""

from __future__ import annotations

import threading
from abc import ABC, abstractmethod
from typing import Optional

import numpy as np

from ..errors import (
    ContractViolationError,
    EmptyInputError,
    InvalidHorizonError,
)

__all__ = ["Forecaster", "QueryLedger", "CountingForecaster"]


class Forecaster(ABC):
    """Base class for all forecasting oracles.

    predict() validates the inputs, delegates to the subclass _forecast(),
    and checks the output contract (length == horizon, all finite), so
    individual models only implement the forecasting rule itself.
    """

    descriptor: str = "forecaster"
    # Maximum concurrent predict() calls the oracle tolerates; None means any.
    max_in_flight: Optional[int] = None

    def predict(self, history, horizon: int) -> np.ndarray:
        arr = np.asarray(history, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError(f"history must be 1-dimensional, got shape {arr.shape}")
        if arr.size == 0:
            raise EmptyInputError("history must be non-empty")
        if not np.all(np.isfinite(arr)):
            raise ValueError("history contains non-finite values")
        horizon = int(horizon)
        if horizon < 1:
            raise InvalidHorizonError(f"horizon must be >= 1, got {horizon}")
        out = np.asarray(self._forecast(arr, horizon), dtype=np.float64)
        if out.shape != (horizon,):
            raise ContractViolationError(
                f"{self.descriptor}: produced {out.shape} values for horizon {horizon}"
            )
        if not np.all(np.isfinite(out)):
            raise ContractViolationError(f"{self.descriptor}: produced non-finite forecast values")
        return out

    @abstractmethod
    def _forecast(self, history: np.ndarray, horizon: int) -> np.ndarray:
        """Produce the forecast; inputs are already validated."""


class QueryLedger:
    """Thread-safe monotone counter of oracle queries. There is no reset."""

    def __init__(self):
        self._count = 0
        self._lock = threading.Lock()

    @property
    def count(self) -> int:
        return self._count

    def increment(self) -> int:
        with self._lock:
            self._count += 1
            return self._count


class CountingForecaster(Forecaster):
    """Wraps any forecaster so every predict() call lands in a QueryLedger.

    Failed queries count too: the attacker spent the request either way.
    """

    def __init__(self, inner: Forecaster, ledger: Optional[QueryLedger] = None):
        self.inner = inner
        self.ledger = ledger if ledger is not None else QueryLedger()

    @property
    def descriptor(self) -> str:  # type: ignore[override]
        return self.inner.descriptor

    @property
    def max_in_flight(self) -> Optional[int]:  # type: ignore[override]
        return self.inner.max_in_flight

    def predict(self, history, horizon: int) -> np.ndarray:
        self.ledger.increment()
        return self.inner.predict(history, horizon)

    def _forecast(self, history: np.ndarray, horizon: int) -> np.ndarray:
        raise AssertionError("CountingForecaster delegates predict() directly")
