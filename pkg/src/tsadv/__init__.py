"""tsadv: query-only adversarial attacks on black-box time series forecasters.

The package splits along the trust boundary of the threat model:

- `series`, `metrics`: data handling and evaluation-side scoring.
- `forecasters`: the oracles (a local zoo, a remote HTTP client, a
  bundled loopback stub server) plus query accounting.
- `attack`: the attacker. It sees input windows and oracle outputs only;
  none of its entry points accept ground truth.
- `harness`: seeded, reproducible evaluation runs and their exports.
- `cli`: the `tsadv` command.
"""

from .attack import (
    AbsoluteEpsilon,
    AdversarialExample,
    AttackConfig,
    GradientEstimate,
    MeanRatioEpsilon,
    ProbeSignal,
    TargetSequence,
    dga_attack,
    estimate_gradient,
    example_to_json,
    gwn_baseline,
    loss_value,
    make_gwn_target,
    resolve_epsilon,
    sample_probe,
    sign_step,
)
from .errors import TsadvError
from .forecasters import (
    ARForecaster,
    ARModel,
    ConstantForecaster,
    CountingForecaster,
    ExpSmoothingForecaster,
    Forecaster,
    ForecasterSpec,
    PersistenceForecaster,
    QueryLedger,
    RemoteForecaster,
    SeasonalNaiveForecaster,
    StubForecastServer,
    fit_ar,
)
from .harness import (
    DatasetSpec,
    ExperimentPlan,
    MatrixResult,
    SyntheticSpec,
    WindowSpec,
    bundled_plan_path,
    export_analysis,
    paired_sign_test,
    run_cell,
    run_matrix,
    sweep_epsilon,
    synthetic_series,
    write_run_directory,
    write_sweep_directory,
)
from .metrics import acf, histogram, mae, mse, normalized_mae_increase
from .series import (
    SeriesStats,
    SplitSpec,
    TimeSeries,
    WindowPair,
    chronological_split,
    load_csv,
    make_windows,
    series_stats,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "TsadvError",
    # series
    "TimeSeries",
    "SplitSpec",
    "WindowPair",
    "SeriesStats",
    "load_csv",
    "chronological_split",
    "make_windows",
    "series_stats",
    # metrics
    "mse",
    "mae",
    "normalized_mae_increase",
    "acf",
    "histogram",
    # forecasters
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
    # attack
    "AbsoluteEpsilon",
    "MeanRatioEpsilon",
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
    # harness
    "ExperimentPlan",
    "DatasetSpec",
    "SyntheticSpec",
    "WindowSpec",
    "bundled_plan_path",
    "MatrixResult",
    "run_cell",
    "run_matrix",
    "sweep_epsilon",
    "paired_sign_test",
    "synthetic_series",
    "export_analysis",
    "write_run_directory",
    "write_sweep_directory",
]
