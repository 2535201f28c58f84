"""Local forecasting models used as attack targets and test oracles.

These are deliberately simple, fast, deterministic models. They stand in
for the expensive black boxes one would attack in the field, so the whole
evaluation harness runs at desk scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import (
    HistoryTooShortError,
    InvalidAlphaError,
    SeriesTooShortError,
    SingularSystemError,
)
from .base import Forecaster

__all__ = [
    "PersistenceForecaster",
    "SeasonalNaiveForecaster",
    "ExpSmoothingForecaster",
    "ConstantForecaster",
    "ARModel",
    "ARForecaster",
    "fit_ar",
    "ForecasterSpec",
]


class PersistenceForecaster(Forecaster):
    """Repeats the last observed value across the whole horizon."""

    descriptor = "persistence"

    def _forecast(self, history: np.ndarray, horizon: int) -> np.ndarray:
        return np.full(horizon, history[-1])


class SeasonalNaiveForecaster(Forecaster):
    """Repeats the last full season; season_length=1 degenerates to persistence."""

    def __init__(self, season_length: int):
        if season_length < 1:
            raise ValueError(f"season_length must be >= 1, got {season_length}")
        self.season_length = int(season_length)
        self.descriptor = f"seasonal-{self.season_length}"

    def _forecast(self, history: np.ndarray, horizon: int) -> np.ndarray:
        m = self.season_length
        if history.size < m:
            raise HistoryTooShortError(
                f"{self.descriptor}: needs at least {m} points, got {history.size}"
            )
        season = history[-m:]
        reps = -(-horizon // m)  # ceil division
        return np.tile(season, reps)[:horizon]


class ExpSmoothingForecaster(Forecaster):
    """Simple exponential smoothing; forecasts are flat at the final level.

    The level starts at the first observation and then follows
    level = alpha * x + (1 - alpha) * level for each subsequent point.
    """

    def __init__(self, alpha: float):
        if not (0.0 < alpha <= 1.0):
            raise InvalidAlphaError(f"smoothing factor must be in (0, 1], got {alpha}")
        self.alpha = float(alpha)
        self.descriptor = f"expsmooth-{self.alpha:g}"

    def _forecast(self, history: np.ndarray, horizon: int) -> np.ndarray:
        level = history[0]
        alpha = self.alpha
        for value in history[1:]:
            level = alpha * value + (1.0 - alpha) * level
        return np.full(horizon, level)


class ConstantForecaster(Forecaster):
    """Ignores the input entirely; useful as a degenerate test oracle."""

    def __init__(self, value: float):
        self.value = float(value)
        self.descriptor = f"constant-{self.value:g}"

    def _forecast(self, history: np.ndarray, horizon: int) -> np.ndarray:
        return np.full(horizon, self.value)


@dataclass(frozen=True)
class ARModel:
    """A fitted autoregression x_t = intercept + sum_j coefficients[j] * x_{t-1-j}."""

    coefficients: np.ndarray
    intercept: float

    def __post_init__(self):
        coef = np.asarray(self.coefficients, dtype=np.float64).copy()
        coef.flags.writeable = False
        object.__setattr__(self, "coefficients", coef)
        if coef.ndim != 1 or coef.size < 1:
            raise ValueError("coefficients must be a non-empty 1-d array")

    @property
    def order(self) -> int:
        return int(self.coefficients.size)


def fit_ar(train, order: int) -> ARModel:
    """Fit an AR(order) model with intercept by ordinary least squares.

    Requires at least 2 * order + 1 training points so the system is not
    underdetermined. A rank-deficient design (for example a constant
    series) raises SingularSystemError rather than being regularized away.
    """
    arr = np.asarray(train, dtype=np.float64)
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    n = arr.size
    if n < 2 * order + 1:
        raise SeriesTooShortError(
            f"AR({order}) needs at least {2 * order + 1} training points, got {n}"
        )
    if not np.all(np.isfinite(arr)):
        raise ValueError("training values contain non-finite entries")

    # Row for time t: [x_{t-1}, ..., x_{t-order}, 1] -> x_t
    columns = [arr[order - 1 - j : n - 1 - j] for j in range(order)]
    columns.append(np.ones(n - order))
    design = np.column_stack(columns)
    response = arr[order:]
    params, _, rank, _ = np.linalg.lstsq(design, response, rcond=None)
    if rank < order + 1:
        raise SingularSystemError(
            f"AR({order}) design matrix has rank {rank} < {order + 1}"
        )
    return ARModel(coefficients=params[:order], intercept=float(params[order]))


class ARForecaster(Forecaster):
    """Forecasts with a fitted ARModel, feeding predictions back recursively."""

    def __init__(self, model: ARModel):
        self.model = model
        self.descriptor = f"ar{model.order}"

    @classmethod
    def fit(cls, train, order: int) -> "ARForecaster":
        return cls(fit_ar(train, order))

    def _forecast(self, history: np.ndarray, horizon: int) -> np.ndarray:
        p = self.model.order
        if history.size < p:
            raise HistoryTooShortError(
                f"{self.descriptor}: needs at least {p} points, got {history.size}"
            )
        # recent[j] holds the value at lag j+1 relative to the next step
        recent = list(history[-p:][::-1])
        coef = self.model.coefficients
        out = np.empty(horizon)
        for step in range(horizon):
            nxt = self.model.intercept + float(np.dot(coef, recent))
            out[step] = nxt
            recent = [nxt] + recent[:-1]
        return out


@dataclass(frozen=True)
class ForecasterSpec:
    """A buildable description of a forecaster, as used in plans and CLI flags.

    Kinds and their parameters:
      persistence               (no parameters)
      seasonal_naive            season: int
      exp_smoothing             alpha: float
      ar                        order: int (fitted on the train split)
      constant                  value: float
      remote                    url: str (optional, else env), timeout_ms, token
    """

    kind: str
    params: dict = field(default_factory=dict)

    _KINDS = ("persistence", "seasonal_naive", "exp_smoothing", "ar", "constant", "remote")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown forecaster kind {self.kind!r}; choose from {self._KINDS}")

    @property
    def needs_training(self) -> bool:
        return self.kind == "ar"

    @property
    def label(self) -> str:
        p = self.params
        if self.kind == "persistence":
            return "persistence"
        if self.kind == "seasonal_naive":
            return f"seasonal-{int(p['season'])}"
        if self.kind == "exp_smoothing":
            return f"expsmooth-{float(p['alpha']):g}"
        if self.kind == "ar":
            return f"ar{int(p['order'])}"
        if self.kind == "constant":
            return f"constant-{float(p['value']):g}"
        return "remote"

    def build(self, train=None) -> Forecaster:
        """Construct the forecaster, fitting on `train` when the kind needs it."""
        p = self.params
        if self.kind == "persistence":
            return PersistenceForecaster()
        if self.kind == "seasonal_naive":
            return SeasonalNaiveForecaster(int(p["season"]))
        if self.kind == "exp_smoothing":
            return ExpSmoothingForecaster(float(p["alpha"]))
        if self.kind == "constant":
            return ConstantForecaster(float(p["value"]))
        if self.kind == "ar":
            if train is None:
                raise ValueError("an 'ar' forecaster needs training values to fit")
            return ARForecaster.fit(train, int(p["order"]))
        from .remote import RemoteForecaster  # deferred: requests import

        return RemoteForecaster(
            endpoint=p.get("url"),
            token=p.get("token"),
            timeout_ms=p.get("timeout_ms"),
        )

    @classmethod
    def from_string(cls, text: str) -> "ForecasterSpec":
        """Parse CLI shorthand like 'ar:2', 'expsmooth:0.3', 'seasonal:24',
        'persistence', 'constant:10', 'remote' or 'remote:http://host/path'."""
        head, _, arg = text.strip().partition(":")
        head = head.lower().replace("_", "-")
        try:
            if head == "persistence":
                return cls("persistence")
            if head in ("seasonal", "seasonal-naive"):
                return cls("seasonal_naive", {"season": int(arg)})
            if head in ("expsmooth", "exp-smoothing", "ses"):
                return cls("exp_smoothing", {"alpha": float(arg)})
            if head == "ar":
                return cls("ar", {"order": int(arg)})
            if head == "constant":
                return cls("constant", {"value": float(arg)})
            if head == "remote":
                return cls("remote", {"url": arg} if arg else {})
        except ValueError as exc:
            raise ValueError(f"bad forecaster argument in {text!r}: {exc}") from None
        raise ValueError(f"unknown forecaster {text!r}")

    @classmethod
    def from_json(cls, obj: dict) -> "ForecasterSpec":
        if not isinstance(obj, dict) or "kind" not in obj:
            raise ValueError(f"forecaster entry must be an object with a 'kind': {obj!r}")
        params = {k: v for k, v in obj.items() if k != "kind"}
        return cls(str(obj["kind"]), params)

    def to_json(self) -> dict:
        return {"kind": self.kind, **self.params}
