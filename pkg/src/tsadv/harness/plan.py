"""Experiment plans: what to run, on what data, with which budget.

A plan is a plain JSON-serializable description. Loading, echoing, and
validation live here; execution lives in runner.py. Plans deliberately
exclude anything machine-specific (worker counts, absolute timing), so a
plan echo plus a master seed pins the entire run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

from ..attack import AbsoluteEpsilon, AttackConfig, MeanRatioEpsilon
from ..errors import PlanError
from ..forecasters.zoo import ForecasterSpec
from ..series import SplitSpec, TimeSeries, load_csv
from .synthetic import synthetic_series

__all__ = [
    "WindowSpec",
    "SyntheticSpec",
    "DatasetSpec",
    "ExperimentPlan",
    "bundled_plan_path",
]

VARIANT_ORDER = ("clean", "gwn", "dga")


@dataclass(frozen=True)
class WindowSpec:
    """Input length, forecast horizon, and origin stride for evaluation."""

    history: int = 96
    horizon: int = 48
    stride: Optional[int] = None  # None: advance by one horizon per window

    def __post_init__(self):
        if self.history < 1:
            raise PlanError(f"window history must be >= 1, got {self.history}")
        if not (1 <= self.horizon <= self.history):
            raise PlanError(
                f"window horizon must be in [1, history={self.history}], got {self.horizon}"
            )
        if self.stride is not None and self.stride < 1:
            raise PlanError(f"window stride must be >= 1, got {self.stride}")

    @property
    def effective_stride(self) -> int:
        return self.stride if self.stride is not None else self.horizon

    def to_json(self) -> dict:
        doc = {"history": self.history, "horizon": self.horizon}
        if self.stride is not None:
            doc["stride"] = self.stride
        return doc


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the bundled sinusoid + AR-noise generator."""

    length: int
    seed: int
    amplitude: float = 0.5
    period: float = 22.0
    offset: float = 10.0
    ar_coef: float = 0.6
    noise_sd: float = 0.1

    def to_json(self) -> dict:
        return {
            "length": self.length,
            "seed": self.seed,
            "amplitude": self.amplitude,
            "period": self.period,
            "offset": self.offset,
            "ar_coef": self.ar_coef,
            "noise_sd": self.noise_sd,
        }


@dataclass(frozen=True)
class DatasetSpec:
    """One series source: either a CSV column or a synthetic recipe."""

    name: str
    path: Optional[str] = None
    column: object = None  # header name or 0-based index
    timestamp_column: object = None
    synthetic: Optional[SyntheticSpec] = None

    def __post_init__(self):
        if not self.name:
            raise PlanError("dataset name must be non-empty")
        has_csv = self.path is not None
        has_synth = self.synthetic is not None
        if has_csv == has_synth:
            raise PlanError(
                f"dataset {self.name!r} must have exactly one of 'path' or 'synthetic'"
            )
        if has_csv and self.column is None:
            raise PlanError(f"dataset {self.name!r} needs a 'column' to read from {self.path}")

    def load(self) -> TimeSeries:
        if self.synthetic is not None:
            s = self.synthetic
            return synthetic_series(
                s.length,
                s.seed,
                amplitude=s.amplitude,
                period=s.period,
                offset=s.offset,
                ar_coef=s.ar_coef,
                noise_sd=s.noise_sd,
                name=self.name,
            )
        return load_csv(self.path, self.column, self.timestamp_column, name=self.name)

    def to_json(self) -> dict:
        doc: dict = {"name": self.name}
        if self.synthetic is not None:
            doc["synthetic"] = self.synthetic.to_json()
        else:
            doc["path"] = self.path
            doc["column"] = self.column
            if self.timestamp_column is not None:
                doc["timestamp_column"] = self.timestamp_column
        return doc


def _attack_from_json(obj: dict) -> AttackConfig:
    if not isinstance(obj, dict):
        raise PlanError(f"'attack' must be an object, got {type(obj).__name__}")
    known = {
        "epsilon_ratio",
        "epsilon_abs",
        "probe_scale",
        "sign_convention",
        "n_directions",
        "loss",
        "gwn_mode",
    }
    unknown = set(obj) - known
    if unknown:
        raise PlanError(f"unknown attack fields: {sorted(unknown)}")
    if "epsilon_ratio" in obj and "epsilon_abs" in obj:
        raise PlanError("give either epsilon_ratio or epsilon_abs, not both")
    defaults = AttackConfig()
    if "epsilon_abs" in obj:
        epsilon = AbsoluteEpsilon(float(obj["epsilon_abs"]))
    elif "epsilon_ratio" in obj:
        epsilon = MeanRatioEpsilon(float(obj["epsilon_ratio"]))
    else:
        epsilon = defaults.epsilon
    try:
        return AttackConfig(
            epsilon=epsilon,
            probe_scale=float(obj.get("probe_scale", defaults.probe_scale)),
            sign_convention=str(obj.get("sign_convention", defaults.sign_convention)),
            n_directions=int(obj.get("n_directions", defaults.n_directions)),
            loss=str(obj.get("loss", defaults.loss)),
            gwn_mode=str(obj.get("gwn_mode", defaults.gwn_mode)),
        )
    except (TypeError, ValueError) as exc:
        raise PlanError(f"bad attack config: {exc}") from None


def _attack_to_json(config: AttackConfig) -> dict:
    doc: dict = {}
    if isinstance(config.epsilon, AbsoluteEpsilon):
        doc["epsilon_abs"] = config.epsilon.value
    else:
        doc["epsilon_ratio"] = config.epsilon.ratio
    doc.update(
        probe_scale=config.probe_scale,
        sign_convention=config.sign_convention,
        n_directions=config.n_directions,
        loss=config.loss,
        gwn_mode=config.gwn_mode,
    )
    return doc


@dataclass(frozen=True)
class ExperimentPlan:
    """The full evaluation matrix: datasets x forecasters x variants."""

    datasets: tuple = ()
    forecasters: tuple = ()
    variants: tuple = VARIANT_ORDER
    attack: AttackConfig = field(default_factory=AttackConfig)
    window: WindowSpec = field(default_factory=WindowSpec)
    split: SplitSpec = field(default_factory=SplitSpec)
    master_seed: int = 0
    max_windows: Optional[int] = None
    acf_max_lag: int = 48
    histogram_bins: int = 30

    def __post_init__(self):
        object.__setattr__(self, "datasets", tuple(self.datasets))
        object.__setattr__(self, "forecasters", tuple(self.forecasters))
        if not self.datasets:
            raise PlanError("plan needs at least one dataset")
        if not self.forecasters:
            raise PlanError("plan needs at least one forecaster")
        names = [d.name for d in self.datasets]
        if len(set(names)) != len(names):
            raise PlanError(f"dataset names must be unique, got {names}")
        variants = tuple(self.variants)
        if not variants:
            raise PlanError("plan needs at least one variant")
        unknown = set(variants) - set(VARIANT_ORDER)
        if unknown:
            raise PlanError(f"unknown variants {sorted(unknown)}; choose from {VARIANT_ORDER}")
        if len(set(variants)) != len(variants):
            raise PlanError(f"duplicate variants in {variants}")
        if ("gwn" in variants or "dga" in variants) and "clean" not in variants:
            raise PlanError("attack variants need the clean variant as their baseline")
        # store in canonical clean, gwn, dga order
        object.__setattr__(
            self, "variants", tuple(v for v in VARIANT_ORDER if v in variants)
        )
        if self.max_windows is not None and self.max_windows < 1:
            raise PlanError(f"max_windows must be >= 1, got {self.max_windows}")
        if self.acf_max_lag < 1:
            raise PlanError(f"acf_max_lag must be >= 1, got {self.acf_max_lag}")
        if self.histogram_bins < 1:
            raise PlanError(f"histogram_bins must be >= 1, got {self.histogram_bins}")

    def to_json(self) -> dict:
        doc: dict = {
            "datasets": [d.to_json() for d in self.datasets],
            "forecasters": [f.to_json() for f in self.forecasters],
            "variants": list(self.variants),
            "attack": _attack_to_json(self.attack),
            "window": self.window.to_json(),
            "split": {
                "train": self.split.train,
                "validation": self.split.validation,
                "test": self.split.test,
            },
            "master_seed": self.master_seed,
            "acf_max_lag": self.acf_max_lag,
            "histogram_bins": self.histogram_bins,
        }
        if self.max_windows is not None:
            doc["max_windows"] = self.max_windows
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "ExperimentPlan":
        if not isinstance(doc, dict):
            raise PlanError(f"plan must be a JSON object, got {type(doc).__name__}")
        known = {
            "datasets",
            "forecasters",
            "variants",
            "attack",
            "window",
            "split",
            "master_seed",
            "max_windows",
            "acf_max_lag",
            "histogram_bins",
        }
        unknown = set(doc) - known
        if unknown:
            raise PlanError(f"unknown plan fields: {sorted(unknown)}")
        try:
            datasets = tuple(_dataset_from_json(d) for d in doc.get("datasets", []))
            forecasters = tuple(ForecasterSpec.from_json(f) for f in doc.get("forecasters", []))
            window_doc = doc.get("window", {})
            window = WindowSpec(
                history=int(window_doc.get("history", 96)),
                horizon=int(window_doc.get("horizon", 48)),
                stride=(int(window_doc["stride"]) if "stride" in window_doc else None),
            )
            split_doc = doc.get("split", {})
            split = SplitSpec(
                train=float(split_doc.get("train", 0.5)),
                validation=float(split_doc.get("validation", 0.25)),
                test=float(split_doc.get("test", 0.25)),
            )
            return cls(
                datasets=datasets,
                forecasters=forecasters,
                variants=tuple(doc.get("variants", VARIANT_ORDER)),
                attack=_attack_from_json(doc.get("attack", {})),
                window=window,
                split=split,
                master_seed=int(doc.get("master_seed", 0)),
                max_windows=(int(doc["max_windows"]) if doc.get("max_windows") is not None else None),
                acf_max_lag=int(doc.get("acf_max_lag", 48)),
                histogram_bins=int(doc.get("histogram_bins", 30)),
            )
        except PlanError:
            raise
        except (TypeError, ValueError, KeyError) as exc:
            raise PlanError(f"bad plan: {exc}") from None

    @classmethod
    def from_file(cls, path: str) -> "ExperimentPlan":
        with open(path, "r", encoding="utf-8") as handle:
            try:
                doc = json.load(handle)
            except json.JSONDecodeError as exc:
                raise PlanError(f"{path}: not valid JSON: {exc}") from None
        return cls.from_json(doc)


def _dataset_from_json(obj: dict) -> DatasetSpec:
    if not isinstance(obj, dict):
        raise PlanError(f"dataset entry must be an object, got {type(obj).__name__}")
    known = {"name", "path", "column", "timestamp_column", "synthetic"}
    unknown = set(obj) - known
    if unknown:
        raise PlanError(f"unknown dataset fields: {sorted(unknown)}")
    synthetic = None
    if obj.get("synthetic") is not None:
        s = obj["synthetic"]
        if not isinstance(s, dict):
            raise PlanError("'synthetic' must be an object")
        synth_known = {"length", "seed", "amplitude", "period", "offset", "ar_coef", "noise_sd"}
        synth_unknown = set(s) - synth_known
        if synth_unknown:
            raise PlanError(f"unknown synthetic fields: {sorted(synth_unknown)}")
        defaults = SyntheticSpec(length=1, seed=0)
        synthetic = SyntheticSpec(
            length=int(s["length"]),
            seed=int(s["seed"]),
            amplitude=float(s.get("amplitude", defaults.amplitude)),
            period=float(s.get("period", defaults.period)),
            offset=float(s.get("offset", defaults.offset)),
            ar_coef=float(s.get("ar_coef", defaults.ar_coef)),
            noise_sd=float(s.get("noise_sd", defaults.noise_sd)),
        )
    return DatasetSpec(
        name=str(obj.get("name", "")),
        path=obj.get("path"),
        column=obj.get("column"),
        timestamp_column=obj.get("timestamp_column"),
        synthetic=synthetic,
    )


def bundled_plan_path() -> str:
    """Filesystem path of the packaged synthetic evaluation plan."""
    return str(resources.files("tsadv").joinpath("data/synthetic_plan.json"))
