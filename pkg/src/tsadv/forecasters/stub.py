"""A loopback HTTP server speaking the forecast wire protocol.

Ships with the package so the remote client can be exercised end to end
without any external service: tests, demos, and `tsadv remote-check` all
point at this. Failure modes are switchable to drill each protocol error.
"""

from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional

from ..errors import TsadvError
from .base import Forecaster

__all__ = ["StubForecastServer"]

_MODES = ("ok", "short", "error", "hang")


class StubForecastServer:
    """Serves a wrapped in-process forecaster over HTTP on 127.0.0.1.

    mode="ok"     honest protocol behavior
    mode="short"  returns horizon - 1 values (length contract violation)
    mode="error"  returns status 500 with a JSON error body
    mode="hang"   sleeps `hang_seconds` before answering (client times out)

    Use as a context manager, or call start()/stop() explicitly.
    """

    def __init__(
        self,
        forecaster: Forecaster,
        host: str = "127.0.0.1",
        port: int = 0,
        *,
        required_token: Optional[str] = None,
        mode: str = "ok",
        hang_seconds: float = 60.0,
    ):
        if mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}, got {mode!r}")
        self.forecaster = forecaster
        self.host = host
        self.mode = mode
        self.required_token = required_token
        self.hang_seconds = hang_seconds
        self._requested_port = port
        self._server: Optional[ThreadingHTTPServer] = None
        self._thread: Optional[threading.Thread] = None

    @property
    def port(self) -> int:
        if self._server is None:
            raise RuntimeError("server is not running")
        return self._server.server_address[1]

    @property
    def url(self) -> str:
        return f"http://{self.host}:{self.port}/forecast"

    def start(self) -> "StubForecastServer":
        if self._server is not None:
            raise RuntimeError("server already started")
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):  # keep test output quiet
                pass

            def _reply(self, status: int, body: dict):
                data = json.dumps(body).encode("utf-8")
                self.send_response(status)
                self.send_header("content-type", "application/json")
                self.send_header("content-length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def do_POST(self):
                if stub.mode == "hang":
                    time.sleep(stub.hang_seconds)
                if stub.required_token is not None:
                    expected = f"Bearer {stub.required_token}"
                    if self.headers.get("authorization") != expected:
                        return self._reply(401, {"error": "unauthorized"})
                if stub.mode == "error":
                    return self._reply(500, {"error": "synthetic server failure"})
                try:
                    length = int(self.headers.get("content-length", "0"))
                    payload = json.loads(self.rfile.read(length))
                    series = payload["series"]
                    horizon = payload["horizon"]
                    if not isinstance(series, list) or not isinstance(horizon, int):
                        raise ValueError("series must be a list and horizon an int")
                except (ValueError, KeyError, TypeError) as exc:
                    return self._reply(400, {"error": f"bad request: {exc}"})
                try:
                    forecast = [float(v) for v in stub.forecaster.predict(series, horizon)]
                except (TsadvError, ValueError) as exc:
                    return self._reply(500, {"error": f"forecast failed: {exc}"})
                if stub.mode == "short":
                    forecast = forecast[:-1]
                self._reply(200, {"forecast": forecast})

        server = ThreadingHTTPServer((self.host, self._requested_port), Handler)
        server.daemon_threads = True
        self._server = server
        # short poll interval so stop() returns promptly
        self._thread = threading.Thread(
            target=lambda: server.serve_forever(poll_interval=0.05), daemon=True
        )
        self._thread.start()
        return self

    def stop(self):
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
            self._server = None
            self._thread = None

    def __enter__(self) -> "StubForecastServer":
        return self.start()

    def __exit__(self, *exc_info):
        self.stop()
