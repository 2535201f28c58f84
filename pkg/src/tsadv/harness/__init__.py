"""Desk-scale evaluation harness: plans, deterministic runs, exports."""

from .plan import DatasetSpec, ExperimentPlan, SyntheticSpec, WindowSpec, bundled_plan_path
from .runner import (
    CellResult,
    MatrixResult,
    RunRecord,
    SignTestResult,
    SweepRow,
    WindowFailure,
    derive_seed,
    paired_sign_test,
    run_cell,
    run_matrix,
    sweep_epsilon,
)
from .exports import export_analysis, write_run_directory, write_sweep_directory
from .synthetic import synthetic_series

__all__ = [
    "ExperimentPlan",
    "DatasetSpec",
    "SyntheticSpec",
    "WindowSpec",
    "bundled_plan_path",
    "RunRecord",
    "WindowFailure",
    "CellResult",
    "MatrixResult",
    "SignTestResult",
    "SweepRow",
    "derive_seed",
    "paired_sign_test",
    "run_cell",
    "run_matrix",
    "sweep_epsilon",
    "export_analysis",
    "write_run_directory",
    "write_sweep_directory",
    "synthetic_series",
]
