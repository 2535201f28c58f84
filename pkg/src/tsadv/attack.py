"""Query-only adversarial perturbations for black-box forecasters.

The attacker here owns nothing but the input window and the right to call
predict(). The main routine builds an anomalous white-noise target from
the window's own statistics, probes the oracle once per direction with a
tiny signed nudge, turns the observed loss change into an element-wise
gradient surrogate, and commits the full perturbation budget along the
sign of that surrogate. Two oracle calls per probe direction, no gradient
access, no training data, and never a look at the future truth values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import (
    DegenerateScaleError,
    EmptyInputError,
    InvalidHorizonError,
    LengthMismatchError,
    ZeroMeanReferenceError,
)
from .forecasters.base import Forecaster
from .series import SeriesStats, series_stats

__all__ = [
    "AbsoluteEpsilon",
    "MeanRatioEpsilon",
    "EpsilonSpec",
    "AttackConfig",
    "TargetSequence",
    "ProbeSignal",
    "GradientEstimate",
    "AdversarialExample",
    "resolve_epsilon",
    "make_gwn_target",
    "sample_probe",
    "loss_value",
    "estimate_gradient",
    "sign_step",
    "dga_attack",
    "gwn_baseline",
    "example_to_json",
]

SIGN_CONVENTIONS = ("descent", "ascent")
LOSS_KINDS = ("squared", "absolute")
GWN_MODES = ("clipped-gaussian", "sign-matched")

_NEAR_ZERO = 1e-12


@dataclass(frozen=True)
class AbsoluteEpsilon:
    """A fixed per-element perturbation budget in the series' own units."""

    value: float

    def __post_init__(self):
        if not (np.isfinite(self.value) and self.value > 0):
            raise ValueError(f"epsilon must be a positive finite number, got {self.value}")


@dataclass(frozen=True)
class MeanRatioEpsilon:
    """A budget expressed as a fraction of the dataset's mean magnitude."""

    ratio: float

    def __post_init__(self):
        if not (np.isfinite(self.ratio) and self.ratio > 0):
            raise ValueError(f"epsilon ratio must be a positive finite number, got {self.ratio}")


EpsilonSpec = Union[AbsoluteEpsilon, MeanRatioEpsilon]


@dataclass(frozen=True)
class AttackConfig:
    """Everything the single-shot attack needs besides the window itself.

    sign_convention 'descent' walks the forecast toward the noise target
    (perturbation = -epsilon * sign(g)); 'ascent' walks it away
    (+epsilon * sign(g)). Both spend the identical budget.
    """

    epsilon: EpsilonSpec = MeanRatioEpsilon(0.02)
    probe_scale: float = 1e-3
    sign_convention: str = "descent"
    n_directions: int = 1
    loss: str = "squared"
    gwn_mode: str = "clipped-gaussian"
    rng_seed: int = 0

    def __post_init__(self):
        if not isinstance(self.epsilon, (AbsoluteEpsilon, MeanRatioEpsilon)):
            raise TypeError(f"epsilon must be an EpsilonSpec, got {type(self.epsilon).__name__}")
        if not (np.isfinite(self.probe_scale) and self.probe_scale > 0):
            raise ValueError(f"probe_scale must be positive, got {self.probe_scale}")
        if self.sign_convention not in SIGN_CONVENTIONS:
            raise ValueError(
                f"sign_convention must be one of {SIGN_CONVENTIONS}, got {self.sign_convention!r}"
            )
        if self.n_directions < 1:
            raise ValueError(f"n_directions must be >= 1, got {self.n_directions}")
        if self.loss not in LOSS_KINDS:
            raise ValueError(f"loss must be one of {LOSS_KINDS}, got {self.loss!r}")
        if self.gwn_mode not in GWN_MODES:
            raise ValueError(f"gwn_mode must be one of {GWN_MODES}, got {self.gwn_mode!r}")


def _frozen(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64).copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class TargetSequence:
    """The anomalous forecast the attack steers toward: white noise drawn
    around the attacked window's own mean and spread."""

    values: np.ndarray
    mean: float
    std: float
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))


@dataclass(frozen=True)
class ProbeSignal:
    """A tiny signed nudge added to the window for one oracle probe.

    Every element is +scale or -scale, never zero, so the elementwise
    division in the gradient surrogate is always defined.
    """

    values: np.ndarray
    scale: float

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))


@dataclass(frozen=True)
class GradientEstimate:
    """Elementwise loss-change surrogate: values[i] * probe[i] equals the
    observed loss difference, for every i."""

    values: np.ndarray
    loss_at_base: float
    loss_at_probe: float

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))


@dataclass(frozen=True)
class AdversarialExample:
    """A finished perturbation plus the bookkeeping needed to audit it."""

    perturbed_history: np.ndarray
    perturbation: np.ndarray
    epsilon: float
    queries_used: int
    seed: int
    target: Optional[TargetSequence] = None
    config: Optional[AttackConfig] = None
    gwn_mode: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "perturbed_history", _frozen(self.perturbed_history))
        object.__setattr__(self, "perturbation", _frozen(self.perturbation))
        if self.perturbed_history.shape != self.perturbation.shape:
            raise LengthMismatchError(
                f"perturbation shape {self.perturbation.shape} does not match "
                f"history shape {self.perturbed_history.shape}"
            )


def resolve_epsilon(spec: EpsilonSpec, stats: Optional[SeriesStats] = None) -> float:
    """Turn a budget spec into a concrete per-element bound.

    Mean-ratio budgets are anchored to the dataset-level mean magnitude
    (not the individual window), so every window of a dataset gets the
    same bound. A near-zero reference mean cannot anchor a relative
    budget and raises ZeroMeanReferenceError.
    """
    if isinstance(spec, AbsoluteEpsilon):
        return float(spec.value)
    if not isinstance(spec, MeanRatioEpsilon):
        raise TypeError(f"not an EpsilonSpec: {type(spec).__name__}")
    if stats is None:
        raise ValueError("a mean-ratio budget needs dataset statistics to resolve against")
    reference = abs(stats.mean)
    if reference < _NEAR_ZERO:
        raise ZeroMeanReferenceError(
            f"dataset mean magnitude {reference} is too small to anchor a relative budget"
        )
    return float(spec.ratio * reference)


def make_gwn_target(horizon: int, stats: SeriesStats, seed: int) -> TargetSequence:
    """Draw the white-noise target: horizon iid normals with the window's
    mean and (population) standard deviation."""
    if horizon < 1:
        raise InvalidHorizonError(f"horizon must be >= 1, got {horizon}")
    rng = np.random.default_rng(seed)
    values = rng.normal(loc=stats.mean, scale=stats.std, size=horizon)
    return TargetSequence(values=values, mean=stats.mean, std=stats.std, seed=int(seed))


def sample_probe(length: int, stats: SeriesStats, scale_ratio: float, seed: int) -> ProbeSignal:
    """Draw a random sign pattern scaled to a sliver of the window's spread.

    The element magnitude is scale_ratio * std; if the window is flat
    (std == 0) the mean magnitude anchors the scale instead. A window with
    neither spread nor level cannot size a probe.
    """
    if length < 1:
        raise EmptyInputError(f"probe length must be >= 1, got {length}")
    if not (np.isfinite(scale_ratio) and scale_ratio > 0):
        raise ValueError(f"scale_ratio must be positive, got {scale_ratio}")
    if stats.std > _NEAR_ZERO:
        scale = scale_ratio * stats.std
    elif abs(stats.mean) > _NEAR_ZERO:
        scale = scale_ratio * abs(stats.mean)
    else:
        raise DegenerateScaleError(
            "window has ~zero spread and ~zero mean; cannot size a probe"
        )
    rng = np.random.default_rng(seed)
    signs = rng.integers(0, 2, size=length).astype(np.float64) * 2.0 - 1.0
    return ProbeSignal(values=scale * signs, scale=float(scale))


def loss_value(prediction, target_values, kind: str = "squared") -> float:
    """Attacker-side loss between a forecast and the target sequence."""
    if kind not in LOSS_KINDS:
        raise ValueError(f"loss kind must be one of {LOSS_KINDS}, got {kind!r}")
    p = np.asarray(prediction, dtype=np.float64)
    t = np.asarray(target_values, dtype=np.float64)
    if p.size == 0:
        raise EmptyInputError("loss inputs must be non-empty")
    if p.shape != t.shape:
        raise LengthMismatchError(f"prediction shape {p.shape} vs target shape {t.shape}")
    diff = p - t
    if kind == "squared":
        return float(np.mean(diff * diff))
    return float(np.mean(np.abs(diff)))


def estimate_gradient(
    forecaster: Forecaster,
    history,
    target: TargetSequence,
    probe: ProbeSignal,
    loss: str = "squared",
    *,
    base_forecast=None,
) -> GradientEstimate:
    """One finite-difference pass: query at the window and at window + probe,
    then spread the scalar loss change across elements by dividing it by
    each probe component.

    Issues exactly two oracle queries, or one when `base_forecast` (the
    response for the unperturbed window) is supplied by the caller.
    """
    hist = np.asarray(history, dtype=np.float64)
    if probe.values.shape != hist.shape:
        raise LengthMismatchError(
            f"probe shape {probe.values.shape} does not match history shape {hist.shape}"
        )
    horizon = int(target.values.size)
    if base_forecast is None:
        base_forecast = forecaster.predict(hist, horizon)
    probed_forecast = forecaster.predict(hist + probe.values, horizon)
    loss_at_base = loss_value(base_forecast, target.values, loss)
    loss_at_probe = loss_value(probed_forecast, target.values, loss)
    values = (loss_at_probe - loss_at_base) / probe.values
    return GradientEstimate(values=values, loss_at_base=loss_at_base, loss_at_probe=loss_at_probe)


def sign_step(
    history,
    gradient: GradientEstimate,
    epsilon: float,
    convention: str = "descent",
    *,
    target: Optional[TargetSequence] = None,
    queries_used: int = 0,
    seed: int = 0,
    config: Optional[AttackConfig] = None,
) -> AdversarialExample:
    """Commit the whole budget along the gradient surrogate's sign pattern.

    Each element moves by exactly epsilon, except elements whose surrogate
    is exactly zero, which stay put. 'descent' moves against the sign
    (toward the target); 'ascent' moves with it.
    """
    if not (np.isfinite(epsilon) and epsilon > 0):
        raise ValueError(f"epsilon must be a positive finite number, got {epsilon}")
    if convention not in SIGN_CONVENTIONS:
        raise ValueError(f"convention must be one of {SIGN_CONVENTIONS}, got {convention!r}")
    hist = np.asarray(history, dtype=np.float64)
    if gradient.values.shape != hist.shape:
        raise LengthMismatchError(
            f"gradient shape {gradient.values.shape} does not match history shape {hist.shape}"
        )
    direction = -1.0 if convention == "descent" else 1.0
    perturbation = direction * epsilon * np.sign(gradient.values)
    return AdversarialExample(
        perturbed_history=hist + perturbation,
        perturbation=perturbation,
        epsilon=float(epsilon),
        queries_used=queries_used,
        seed=int(seed),
        target=target,
        config=config,
    )


def dga_attack(
    forecaster: Forecaster,
    history,
    horizon: int,
    config: AttackConfig = AttackConfig(),
    dataset_stats: Optional[SeriesStats] = None,
) -> AdversarialExample:
    """Run the full single-shot attack against one input window.

    Steps: resolve the budget against the dataset statistics, draw the
    white-noise target from the window's own statistics, query the oracle
    once for the clean forecast, then once per probe direction, average
    the per-direction gradient surrogates, and take the signed step.
    Total queries: n_directions + 1. The future truth is never an input.
    """
    hist = np.asarray(history, dtype=np.float64)
    if hist.size == 0:
        raise EmptyInputError("cannot attack an empty window")
    horizon = int(horizon)
    if horizon < 1 or horizon > hist.size:
        raise InvalidHorizonError(
            f"horizon must be in [1, window length {hist.size}], got {horizon}"
        )
    epsilon = resolve_epsilon(config.epsilon, dataset_stats)
    window_stats = series_stats(hist)

    # One independent child seed per random draw, all derived from the
    # config seed, so identical inputs reproduce bit-identical attacks.
    words = np.random.SeedSequence(config.rng_seed).generate_state(
        1 + config.n_directions, dtype=np.uint64
    )
    target = make_gwn_target(horizon, window_stats, int(words[0]))

    base_forecast = forecaster.predict(hist, horizon)
    estimates = []
    for probe_word in words[1:]:
        probe = sample_probe(hist.size, window_stats, config.probe_scale, int(probe_word))
        estimates.append(
            estimate_gradient(
                forecaster, hist, target, probe, config.loss, base_forecast=base_forecast
            )
        )
    if len(estimates) == 1:
        combined = estimates[0]
    else:
        combined = GradientEstimate(
            values=np.mean([e.values for e in estimates], axis=0),
            loss_at_base=estimates[0].loss_at_base,
            loss_at_probe=float(np.mean([e.loss_at_probe for e in estimates])),
        )
    return sign_step(
        hist,
        combined,
        epsilon,
        config.sign_convention,
        target=target,
        queries_used=1 + config.n_directions,
        seed=config.rng_seed,
        config=config,
    )


def gwn_baseline(
    history,
    epsilon: float,
    mode: str = "clipped-gaussian",
    seed: int = 0,
) -> AdversarialExample:
    """Undirected noise at the same budget, for calibrating the attack.

    'clipped-gaussian' draws iid normals with std epsilon and clamps them
    into [-epsilon, +epsilon]; 'sign-matched' uses +/-epsilon uniformly at
    random, matching the attack's exact per-element magnitude. Zero
    oracle queries either way.
    """
    if not (np.isfinite(epsilon) and epsilon > 0):
        raise ValueError(f"epsilon must be a positive finite number, got {epsilon}")
    if mode not in GWN_MODES:
        raise ValueError(f"mode must be one of {GWN_MODES}, got {mode!r}")
    hist = np.asarray(history, dtype=np.float64)
    if hist.size == 0:
        raise EmptyInputError("cannot perturb an empty window")
    rng = np.random.default_rng(seed)
    if mode == "clipped-gaussian":
        perturbation = np.clip(rng.normal(0.0, epsilon, size=hist.size), -epsilon, epsilon)
    else:
        signs = rng.integers(0, 2, size=hist.size).astype(np.float64) * 2.0 - 1.0
        perturbation = epsilon * signs
    return AdversarialExample(
        perturbed_history=hist + perturbation,
        perturbation=perturbation,
        epsilon=float(epsilon),
        queries_used=0,
        seed=int(seed),
        gwn_mode=mode,
    )


def example_to_json(example: AdversarialExample, origin: Optional[int] = None) -> dict:
    """Flatten an AdversarialExample into JSON-ready primitives."""
    doc = {
        "origin": origin,
        "epsilon": example.epsilon,
        "convention": example.config.sign_convention if example.config else None,
        "seed": example.seed,
        "queries": example.queries_used,
        "perturbation": [float(v) for v in example.perturbation],
        "perturbed": [float(v) for v in example.perturbed_history],
        "target": [float(v) for v in example.target.values] if example.target else None,
    }
    if example.gwn_mode is not None:
        doc["gwn_mode"] = example.gwn_mode
    return doc
