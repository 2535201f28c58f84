"""Black-box forecasting oracles: a local zoo, a remote HTTP client, and
the query-accounting wrapper that enforces the threat model's bookkeeping."""

from .base import CountingForecaster, Forecaster, QueryLedger
from .zoo import (
    ARForecaster,
    ARModel,
    ConstantForecaster,
    ExpSmoothingForecaster,
    ForecasterSpec,
    PersistenceForecaster,
    SeasonalNaiveForecaster,
    fit_ar,
)
from .remote import RemoteForecaster
from .stub import StubForecastServer

__all__ = [
    "Forecaster",
    "QueryLedger",
    "CountingForecaster",
    "PersistenceForecaster",
    "SeasonalNaiveForecaster",
    "ExpSmoothingForecaster",
    "ConstantForecaster",
    "ARModel",
    "ARForecaster",
    "fit_ar",
    "ForecasterSpec",
    "RemoteForecaster",
    "StubForecastServer",
]
