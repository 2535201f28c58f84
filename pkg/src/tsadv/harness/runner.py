"""Deterministic execution of experiment plans.

Every window's randomness comes from a seed derived by hashing
(master seed, dataset, variant, origin [, sweep tag]), so results do not
depend on execution order: running with one worker or many, locally or
against the bundled stub server, produces bit-identical records.

Evaluation discipline per window: run the attack first (it sees only the
input window), then issue one fresh oracle query on the perturbed input,
and only then read the truth slice for scoring. The attack's internal
probe responses are never recycled as the evaluation forecast.
"""

from __future__ import annotations

import hashlib
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from ..attack import MeanRatioEpsilon, dga_attack, gwn_baseline, resolve_epsilon
from ..errors import (
    DegenerateScaleError,
    InvalidRatioError,
    LengthMismatchError,
    NoWindowsError,
    OracleError,
    SeriesTooShortError,
    TooFewPairsError,
    ZeroBaselineError,
)
from ..forecasters.base import CountingForecaster, Forecaster
from ..metrics import mae, mse
from ..series import SeriesStats, chronological_split, make_windows, series_stats
from .plan import VARIANT_ORDER, ExperimentPlan

__all__ = [
    "RunRecord",
    "WindowFailure",
    "CellResult",
    "MatrixResult",
    "TableRow",
    "SignTestResult",
    "SweepRow",
    "derive_seed",
    "paired_sign_test",
    "run_cell",
    "run_matrix",
    "sweep_epsilon",
]


def derive_seed(master_seed: int, *parts) -> int:
    """Hash a master seed and context labels into an independent child seed.

    Stable across platforms and processes (unlike hash()), and order
    sensitive, so (a, b) and (b, a) give unrelated streams.
    """
    digest = hashlib.sha256()
    digest.update(str(int(master_seed)).encode("utf-8"))
    for part in parts:
        digest.update(b"\x1f")
        digest.update(str(part).encode("utf-8"))
    return int.from_bytes(digest.digest()[:8], "big")


@dataclass(frozen=True)
class RunRecord:
    """Per-window outcome: scores plus the audit trail."""

    dataset: str
    forecaster: str
    variant: str
    origin: int
    mse: float
    mae: float
    queries: int
    seed: int
    epsilon: float


@dataclass(frozen=True)
class WindowFailure:
    """A window whose oracle or attack failed; the run continues."""

    dataset: str
    forecaster: str
    variant: str
    origin: int
    error: str
    message: str


@dataclass
class CellResult:
    """All windows of one (dataset, forecaster, variant) cell."""

    dataset: str
    forecaster: str
    variant: str
    records: list
    failures: list
    predictions: dict  # origin -> forecast array, successful windows only
    queries_total: int  # ledger count for the whole cell


@dataclass(frozen=True)
class TableRow:
    dataset: str
    forecaster: str
    variant: str
    mse: float
    mae: float
    windows: int
    norm_mae_increase: float


@dataclass(frozen=True)
class SignTestResult:
    """Exact two-sided sign test on paired per-window values."""

    n_pairs: int
    n_first_higher: int
    n_second_higher: int
    p_value: float


@dataclass(frozen=True)
class SweepRow:
    dataset: str
    forecaster: str
    ratio: float
    variant: str
    mean_mae: float
    norm_mae_increase: float


@dataclass
class MatrixResult:
    """Everything run_matrix produced, ready for analysis export."""

    plan: ExperimentPlan
    cells: list

    def cell(self, dataset: str, forecaster: str, variant: str) -> CellResult:
        for c in self.cells:
            if (c.dataset, c.forecaster, c.variant) == (dataset, forecaster, variant):
                return c
        raise KeyError(f"no cell ({dataset!r}, {forecaster!r}, {variant!r})")

    def table(self) -> list:
        """Aggregate rows ordered dataset, then forecaster, then variant."""
        rows = []
        for cell in self.cells:  # cells are already in canonical order
            if cell.records:
                cell_mse = float(np.mean([r.mse for r in cell.records]))
                cell_mae = float(np.mean([r.mae for r in cell.records]))
            else:
                cell_mse = math.nan
                cell_mae = math.nan
            rows.append((cell, cell_mse, cell_mae))
        clean_mae = {
            (cell.dataset, cell.forecaster): row_mae
            for cell, _, row_mae in rows
            if cell.variant == "clean"
        }
        table = []
        for cell, cell_mse, cell_mae in rows:
            if cell.variant == "clean":
                increase = 0.0
            else:
                base = clean_mae.get((cell.dataset, cell.forecaster), math.nan)
                if not base > 0:
                    raise ZeroBaselineError(
                        f"cell ({cell.dataset}, {cell.forecaster}) has no positive clean MAE"
                    )
                increase = (cell_mae - base) / base
            table.append(
                TableRow(
                    dataset=cell.dataset,
                    forecaster=cell.forecaster,
                    variant=cell.variant,
                    mse=cell_mse,
                    mae=cell_mae,
                    windows=len(cell.records),
                    norm_mae_increase=increase,
                )
            )
        return table

    def sign_tests(self) -> dict:
        """Per (dataset, forecaster): sign test of dga MAE vs gwn MAE over
        windows both variants completed. Skips groups lacking either side
        or with too few untied pairs."""
        out = {}
        groups = {}
        for cell in self.cells:
            groups.setdefault((cell.dataset, cell.forecaster), {})[cell.variant] = cell
        for key, by_variant in groups.items():
            if "dga" not in by_variant or "gwn" not in by_variant:
                continue
            dga_mae = {r.origin: r.mae for r in by_variant["dga"].records}
            gwn_mae = {r.origin: r.mae for r in by_variant["gwn"].records}
            shared = sorted(set(dga_mae) & set(gwn_mae))
            try:
                out[key] = paired_sign_test(
                    [dga_mae[o] for o in shared], [gwn_mae[o] for o in shared]
                )
            except TooFewPairsError:
                continue
        return out


def paired_sign_test(first: Sequence[float], second: Sequence[float]) -> SignTestResult:
    """Exact two-sided binomial sign test on pairs (first[i], second[i]).

    Exactly equal pairs are dropped. Needs at least 6 informative pairs;
    fewer cannot reach significance and raise TooFewPairsError.
    """
    if len(first) != len(second):
        raise LengthMismatchError(f"{len(first)} vs {len(second)} paired values")
    wins_first = sum(1 for a, b in zip(first, second) if a > b)
    wins_second = sum(1 for a, b in zip(first, second) if b > a)
    n = wins_first + wins_second
    if n < 6:
        raise TooFewPairsError(f"only {n} untied pairs; need at least 6")
    k = max(wins_first, wins_second)
    tail = sum(math.comb(n, i) for i in range(k, n + 1)) / 2.0**n
    return SignTestResult(
        n_pairs=n,
        n_first_higher=wins_first,
        n_second_higher=wins_second,
        p_value=min(1.0, 2.0 * tail),
    )


def _evaluate_window(
    forecaster: Forecaster,
    window,
    variant: str,
    *,
    dataset_name: str,
    dataset_stats: SeriesStats,
    plan: ExperimentPlan,
    horizon: int,
    seed_parts: tuple = (),
):
    """One window, one variant. Returns (RunRecord, prediction) or raises."""
    seed = derive_seed(plan.master_seed, dataset_name, variant, window.origin_index, *seed_parts)
    config = plan.attack
    if variant == "clean":
        eval_input = window.history
        queries, epsilon = 0, 0.0
    elif variant == "gwn":
        epsilon = resolve_epsilon(config.epsilon, dataset_stats)
        example = gwn_baseline(window.history, epsilon, config.gwn_mode, seed)
        eval_input, queries = example.perturbed_history, example.queries_used
    elif variant == "dga":
        window_config = replace(config, rng_seed=seed)
        example = dga_attack(forecaster, window.history, horizon, window_config, dataset_stats)
        eval_input, queries, epsilon = (
            example.perturbed_history,
            example.queries_used,
            example.epsilon,
        )
    else:
        raise ValueError(f"unknown variant {variant!r}")

    # Fresh oracle query on whatever the variant produced; attack-internal
    # responses are never reused for scoring.
    prediction = forecaster.predict(eval_input, horizon)
    # Truth is read only now, strictly after the attack finished.
    truth = window.truth
    record = RunRecord(
        dataset=dataset_name,
        forecaster=forecaster.descriptor,
        variant=variant,
        origin=window.origin_index,
        mse=mse(prediction, truth),
        mae=mae(prediction, truth),
        queries=queries,
        seed=seed,
        epsilon=epsilon,
    )
    return record, prediction


def run_cell(
    forecaster: Forecaster,
    windows: Sequence,
    variant: str,
    *,
    dataset_name: str,
    dataset_stats: SeriesStats,
    plan: ExperimentPlan,
    jobs: int = 1,
    seed_parts: tuple = (),
) -> CellResult:
    """Evaluate one (dataset, forecaster, variant) cell over all windows.

    Oracle and probe-sizing failures are recorded per window, not fatal.
    Workers never share window state, so any jobs count gives identical
    results; the effective parallelism also respects the forecaster's
    declared max_in_flight.
    """
    if variant not in VARIANT_ORDER:
        raise ValueError(f"unknown variant {variant!r}")
    counted = CountingForecaster(forecaster)
    horizon = plan.window.horizon

    def work(window):
        try:
            record, prediction = _evaluate_window(
                counted,
                window,
                variant,
                dataset_name=dataset_name,
                dataset_stats=dataset_stats,
                plan=plan,
                horizon=horizon,
                seed_parts=seed_parts,
            )
            return window.origin_index, record, prediction, None
        except (OracleError, DegenerateScaleError) as exc:
            failure = WindowFailure(
                dataset=dataset_name,
                forecaster=counted.descriptor,
                variant=variant,
                origin=window.origin_index,
                error=type(exc).__name__,
                message=str(exc),
            )
            return window.origin_index, None, None, failure

    limit = counted.max_in_flight
    effective_jobs = max(1, min(jobs, limit) if limit is not None else jobs)
    if effective_jobs == 1 or len(windows) <= 1:
        outcomes = [work(w) for w in windows]
    else:
        with ThreadPoolExecutor(max_workers=effective_jobs) as pool:
            outcomes = list(pool.map(work, windows))

    outcomes.sort(key=lambda item: item[0])  # stable origin order regardless of jobs
    records = [record for _, record, _, _ in outcomes if record is not None]
    failures = [failure for _, _, _, failure in outcomes if failure is not None]
    predictions = {
        origin: prediction for origin, record, prediction, _ in outcomes if record is not None
    }
    return CellResult(
        dataset=dataset_name,
        forecaster=counted.descriptor,
        variant=variant,
        records=records,
        failures=failures,
        predictions=predictions,
        queries_total=counted.ledger.count,
    )


def _resolve_jobs(plan: ExperimentPlan, jobs: Optional[int]) -> int:
    if jobs is not None:
        if jobs < 1:
            raise ValueError(f"jobs must be >= 1, got {jobs}")
        return jobs
    if any(spec.kind == "remote" for spec in plan.forecasters):
        return 1
    return os.cpu_count() or 1


def _plan_windows(plan: ExperimentPlan, series) -> list:
    _, _, test = chronological_split(series, plan.split)
    try:
        windows = make_windows(
            test, plan.window.history, plan.window.horizon, plan.window.effective_stride
        )
    except SeriesTooShortError as exc:
        raise NoWindowsError(f"dataset {series.name!r}: {exc}") from None
    if plan.max_windows is not None:
        windows = windows[: plan.max_windows]
    return windows


def run_matrix(plan: ExperimentPlan, jobs: Optional[int] = None) -> MatrixResult:
    """Run the whole plan: datasets x forecasters x variants, in plan order.

    Forecasters that need fitting are fitted on the train split only; the
    attacker and all evaluation windows live in the test split. Attack
    budgets resolve against full-dataset statistics.
    """
    jobs = _resolve_jobs(plan, jobs)
    cells = []
    for dataset in plan.datasets:
        series = dataset.load()
        stats = series_stats(series.values)
        train, _, _ = chronological_split(series, plan.split)
        windows = _plan_windows(plan, series)
        for spec in plan.forecasters:
            forecaster = spec.build(train.values if spec.needs_training else None)
            for variant in plan.variants:
                cells.append(
                    run_cell(
                        forecaster,
                        windows,
                        variant,
                        dataset_name=dataset.name,
                        dataset_stats=stats,
                        plan=plan,
                        jobs=jobs,
                    )
                )
    return MatrixResult(plan=plan, cells=cells)


def _validate_ratios(ratios: Sequence[float]) -> list:
    values = [float(r) for r in ratios]
    if not values:
        raise InvalidRatioError("ratio list is empty")
    for r in values:
        if not (math.isfinite(r) and r > 0):
            raise InvalidRatioError(f"ratios must be positive and finite, got {r}")
    for a, b in zip(values, values[1:]):
        if not a < b:
            raise InvalidRatioError(f"ratios must be strictly ascending, got {a} before {b}")
    return values


def sweep_epsilon(
    plan: ExperimentPlan, ratios: Sequence[float], jobs: Optional[int] = None
) -> list:
    """Rerun gwn and dga at several mean-ratio budgets against one shared
    clean baseline, returning SweepRow entries.

    Each (ratio, variant, window) triple draws from its own derived seed,
    so rows are independent of sweep order and worker count.
    """
    ratio_values = _validate_ratios(ratios)
    jobs = _resolve_jobs(plan, jobs)
    rows = []
    for dataset in plan.datasets:
        series = dataset.load()
        stats = series_stats(series.values)
        train, _, _ = chronological_split(series, plan.split)
        windows = _plan_windows(plan, series)
        for spec in plan.forecasters:
            forecaster = spec.build(train.values if spec.needs_training else None)
            clean = run_cell(
                forecaster,
                windows,
                "clean",
                dataset_name=dataset.name,
                dataset_stats=stats,
                plan=plan,
                jobs=jobs,
            )
            if not clean.records:
                raise ZeroBaselineError(
                    f"cell ({dataset.name}, {forecaster.descriptor}) produced no clean windows"
                )
            clean_mae = float(np.mean([r.mae for r in clean.records]))
            if not clean_mae > 0:
                raise ZeroBaselineError(
                    f"cell ({dataset.name}, {forecaster.descriptor}) clean MAE is {clean_mae}"
                )
            for ratio in ratio_values:
                ratio_plan = replace(
                    plan, attack=replace(plan.attack, epsilon=MeanRatioEpsilon(ratio))
                )
                for variant in ("gwn", "dga"):
                    cell = run_cell(
                        forecaster,
                        windows,
                        variant,
                        dataset_name=dataset.name,
                        dataset_stats=stats,
                        plan=ratio_plan,
                        jobs=jobs,
                        seed_parts=(f"ratio={ratio!r}",),
                    )
                    mean_mae = (
                        float(np.mean([r.mae for r in cell.records]))
                        if cell.records
                        else math.nan
                    )
                    rows.append(
                        SweepRow(
                            dataset=dataset.name,
                            forecaster=forecaster.descriptor,
                            ratio=ratio,
                            variant=variant,
                            mean_mae=mean_mae,
                            norm_mae_increase=(mean_mae - clean_mae) / clean_mae,
                        )
                    )
    return rows
