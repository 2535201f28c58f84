"""HTTP client for forecasting services speaking the JSON wire protocol.

Request:  POST <endpoint> with body {"series": [..numbers..], "horizon": n}
          and, when a token is configured, "authorization: Bearer <token>".
Response: 200 with body {"forecast": [..exactly n finite numbers..]}.

Anything else maps to a distinct error: RemoteTimeoutError when the host
cannot be reached or does not answer in time, RemoteHttpError for non-200
statuses, MalformedResponseError for undecodable bodies, and
ResponseLengthError when the forecast length does not match the horizon.
"""

from __future__ import annotations

import math
import os
from typing import Optional
from urllib.parse import urlparse

import numpy as np
import requests

from ..errors import (
    InvalidEndpointError,
    MalformedResponseError,
    RemoteError,
    RemoteHttpError,
    RemoteTimeoutError,
    ResponseLengthError,
)
from .base import Forecaster

__all__ = [
    "RemoteForecaster",
    "ENV_URL",
    "ENV_TOKEN",
    "ENV_TIMEOUT_MS",
    "DEFAULT_TIMEOUT_MS",
]

ENV_URL = "TSADV_REMOTE_URL"
ENV_TOKEN = "TSADV_REMOTE_TOKEN"
ENV_TIMEOUT_MS = "TSADV_REMOTE_TIMEOUT_MS"
DEFAULT_TIMEOUT_MS = 30_000


def _timeout_from_env() -> int:
    raw = os.environ.get(ENV_TIMEOUT_MS)
    if raw is None:
        return DEFAULT_TIMEOUT_MS
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{ENV_TIMEOUT_MS}={raw!r} is not an integer") from None
    if value <= 0:
        raise ValueError(f"{ENV_TIMEOUT_MS} must be positive, got {value}")
    return value


class RemoteForecaster(Forecaster):
    """Treats a remote HTTP service as a black-box forecaster.

    Constructor arguments fall back to the TSADV_REMOTE_URL,
    TSADV_REMOTE_TOKEN, and TSADV_REMOTE_TIMEOUT_MS environment variables.
    """

    max_in_flight = 1  # one request at a time; remote capacity is unknown

    def __init__(
        self,
        endpoint: Optional[str] = None,
        *,
        token: Optional[str] = None,
        timeout_ms: Optional[int] = None,
        session: Optional[requests.Session] = None,
    ):
        endpoint = endpoint or os.environ.get(ENV_URL)
        if not endpoint:
            raise InvalidEndpointError(
                f"no remote endpoint configured; pass one or set {ENV_URL}"
            )
        parsed = urlparse(endpoint)
        if parsed.scheme not in ("http", "https") or not parsed.netloc:
            raise InvalidEndpointError(f"not a usable http(s) URL: {endpoint!r}")
        self.endpoint = endpoint
        self.token = token if token is not None else os.environ.get(ENV_TOKEN)
        self.timeout_ms = int(timeout_ms) if timeout_ms is not None else _timeout_from_env()
        if self.timeout_ms <= 0:
            raise ValueError(f"timeout_ms must be positive, got {self.timeout_ms}")
        self._session = session if session is not None else requests.Session()
        self.descriptor = f"remote({parsed.netloc})"

    def _forecast(self, history: np.ndarray, horizon: int) -> np.ndarray:
        payload = {"series": [float(v) for v in history], "horizon": int(horizon)}
        headers = {}
        if self.token:
            headers["authorization"] = f"Bearer {self.token}"
        try:
            response = self._session.post(
                self.endpoint,
                json=payload,
                headers=headers,
                timeout=self.timeout_ms / 1000.0,
            )
        except requests.Timeout as exc:
            raise RemoteTimeoutError(
                f"{self.endpoint}: no response within {self.timeout_ms} ms"
            ) from exc
        except requests.ConnectionError as exc:
            raise RemoteTimeoutError(f"{self.endpoint}: endpoint unreachable: {exc}") from exc
        except requests.RequestException as exc:
            raise RemoteError(f"{self.endpoint}: request failed: {exc}") from exc

        if response.status_code != 200:
            raise RemoteHttpError(
                f"{self.endpoint}: status {response.status_code}",
                status=response.status_code,
            )
        try:
            body = response.json()
        except ValueError as exc:
            raise MalformedResponseError(f"{self.endpoint}: body is not JSON") from exc
        if not isinstance(body, dict) or "forecast" not in body:
            raise MalformedResponseError(f"{self.endpoint}: missing 'forecast' field")
        forecast = body["forecast"]
        if not isinstance(forecast, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)
            for v in forecast
        ):
            raise MalformedResponseError(
                f"{self.endpoint}: 'forecast' is not a list of finite numbers"
            )
        if len(forecast) != horizon:
            raise ResponseLengthError(
                f"{self.endpoint}: got {len(forecast)} values for horizon {horizon}",
                expected=horizon,
                actual=len(forecast),
            )
        return np.asarray(forecast, dtype=np.float64)
