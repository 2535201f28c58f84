"""Seeded synthetic series: a sinusoid riding on autoregressive noise.

This is the bundled stand-in for real telemetry: periodic structure a
forecaster can exploit, plus correlated noise so nothing is perfectly
predictable. The generator is a pure function of its arguments.
"""

from __future__ import annotations

import numpy as np

from ..series import TimeSeries

__all__ = ["synthetic_series"]


def synthetic_series(
    length: int,
    seed: int,
    *,
    amplitude: float = 0.5,
    period: float = 22.0,
    offset: float = 10.0,
    ar_coef: float = 0.6,
    noise_sd: float = 0.1,
    name: str = "synthetic",
) -> TimeSeries:
    """Generate offset + amplitude*sin(2*pi*t/period) + AR(1) noise.

    The noise follows e[t] = ar_coef * e[t-1] + innovation[t] with iid
    normal innovations of standard deviation noise_sd.
    """
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    if period <= 0:
        raise ValueError(f"period must be positive, got {period}")
    if not (-1.0 < ar_coef < 1.0):
        raise ValueError(f"ar_coef must lie in (-1, 1), got {ar_coef}")
    if noise_sd < 0:
        raise ValueError(f"noise_sd must be >= 0, got {noise_sd}")

    t = np.arange(length, dtype=np.float64)
    values = offset + amplitude * np.sin(2.0 * np.pi * t / period)
    if noise_sd > 0:
        rng = np.random.default_rng(seed)
        innovations = rng.normal(0.0, noise_sd, size=length)
        noise = np.empty(length, dtype=np.float64)
        acc = 0.0
        for i in range(length):
            acc = ar_coef * acc + innovations[i]
            noise[i] = acc
        values = values + noise
    return TimeSeries(values, name=name)
