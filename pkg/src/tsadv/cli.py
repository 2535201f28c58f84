"""The tsadv command line.

Subcommands: attack (perturb one window), evaluate (run a plan and write a
run directory), sweep (budget sweep), remote-check (probe a forecast
endpoint), stub-serve (host the bundled loopback forecast server).

Conventions: machine-readable output is JSON/CSV written to --out or
stdout; everything meant for humans goes to stderr. Exit codes: 0 success,
1 usage error, 2 runtime failure, 3 remote protocol failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import threading
import time
from dataclasses import replace
from typing import Optional

import numpy as np

from .attack import (
    AbsoluteEpsilon,
    AttackConfig,
    MeanRatioEpsilon,
    dga_attack,
    example_to_json,
    loss_value,
)
from .errors import (
    InvalidEndpointError,
    InvalidRatioError,
    PlanError,
    RemoteError,
    TsadvError,
)
from .forecasters import CountingForecaster, ForecasterSpec, RemoteForecaster, StubForecastServer
from .forecasters.remote import DEFAULT_TIMEOUT_MS, ENV_URL
from .harness import (
    DatasetSpec,
    ExperimentPlan,
    WindowSpec,
    bundled_plan_path,
    run_matrix,
    sweep_epsilon,
    write_run_directory,
    write_sweep_directory,
)
from .series import SplitSpec, chronological_split, load_csv, series_stats

__all__ = ["main"]


class _UsageError(Exception):
    """Bad invocation; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so main() owns exit codes."""

    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="tsadv",
        description="Query-only adversarial attacks on black-box time series forecasters.",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    # --- attack -----------------------------------------------------------
    p = sub.add_parser("attack", help="perturb one window of a CSV series")
    p.add_argument("--data", required=True, help="CSV file with a header row")
    p.add_argument("--column", required=True, help="column name or 0-based index")
    p.add_argument("--timestamp-column", default=None, help="optional timestamp column")
    p.add_argument("--model", required=True, help="forecaster, e.g. ar:2, expsmooth:0.3, persistence, seasonal:24, constant:10, remote[:URL]")
    p.add_argument("--history", type=int, default=96, help="input window length (default 96)")
    p.add_argument("--horizon", type=int, default=48, help="forecast horizon (default 48)")
    p.add_argument("--origin", type=int, default=None, help="window start index (default: latest full window)")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--epsilon-ratio", type=float, default=None, help="budget as a fraction of the dataset mean (default 0.02)")
    group.add_argument("--epsilon-abs", type=float, default=None, help="absolute per-element budget")
    p.add_argument("--probe-scale", type=float, default=None, help="probe size relative to window spread (default 0.001)")
    p.add_argument("--convention", choices=["descent", "ascent"], default=None, help="step toward (descent) or away from (ascent) the noise target")
    p.add_argument("--directions", type=int, default=None, help="probe directions to average (default 1)")
    p.add_argument("--loss", choices=["squared", "absolute"], default=None, help="attacker-side loss (default squared)")
    p.add_argument("--seed", type=int, default=0, help="attack RNG seed (default 0)")
    p.add_argument("--split", default="0.5,0.25,0.25", help="train,validation,test fractions used when fitting the model")
    p.add_argument("--out", default=None, help="write the attack JSON here (default: stdout)")
    p.set_defaults(handler=_cmd_attack)

    # --- evaluate ----------------------------------------------------------
    p = sub.add_parser("evaluate", help="run an evaluation plan and write a run directory")
    _add_plan_source_flags(p)
    _add_plan_override_flags(p)
    p.add_argument("--out", required=True, help="run directory to create")
    p.add_argument("--force", action="store_true", help="allow writing into a non-empty directory")
    p.add_argument("--jobs", type=int, default=None, help="parallel windows (default: CPU count, or 1 with a remote model)")
    p.set_defaults(handler=_cmd_evaluate)

    # --- sweep -------------------------------------------------------------
    p = sub.add_parser("sweep", help="rerun gwn/dga across several budget ratios")
    _add_plan_source_flags(p)
    _add_plan_override_flags(p)
    p.add_argument("--ratios", required=True, help="comma-separated ascending budget ratios, e.g. 0.005,0.01,0.02,0.04")
    p.add_argument("--out", required=True, help="output directory for plan.json and sweep.csv")
    p.add_argument("--force", action="store_true", help="allow writing into a non-empty directory")
    p.add_argument("--jobs", type=int, default=None, help="parallel windows (default: CPU count, or 1 with a remote model)")
    p.set_defaults(handler=_cmd_sweep)

    # --- remote-check ------------------------------------------------------
    p = sub.add_parser("remote-check", help="probe a remote forecast endpoint once")
    p.add_argument("--url", default=None, help=f"endpoint URL (default: ${ENV_URL})")
    p.add_argument("--token", default=None, help="bearer token (default: environment)")
    p.add_argument("--timeout-ms", type=int, default=None, help=f"request timeout (default {DEFAULT_TIMEOUT_MS} or environment)")
    p.add_argument("--history", type=int, default=96, help="probe series length (default 96)")
    p.add_argument("--horizon", type=int, default=48, help="requested horizon (default 48)")
    p.set_defaults(handler=_cmd_remote_check)

    # --- stub-serve --------------------------------------------------------
    p = sub.add_parser("stub-serve", help="serve the bundled loopback forecast stub")
    p.add_argument("--model", default="persistence", help="backing forecaster spec (default persistence)")
    p.add_argument("--data", default=None, help="CSV used to fit models that need training")
    p.add_argument("--column", default=None, help="column of --data")
    p.add_argument("--split", default="0.5,0.25,0.25", help="split fractions for fitting")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8787)
    p.add_argument("--mode", choices=["ok", "short", "error", "hang"], default="ok", help="failure mode to simulate (default ok)")
    p.add_argument("--token", default=None, help="require this bearer token")
    p.set_defaults(handler=_cmd_stub_serve)

    return parser


def _add_plan_source_flags(p: argparse.ArgumentParser):
    p.add_argument("--plan", default=None, help="plan JSON file")
    p.add_argument("--bundled-plan", action="store_true", help="use the packaged synthetic plan")
    p.add_argument("--data", default=None, help="CSV file (inline single-dataset plan)")
    p.add_argument("--column", default=None, help="column of --data")
    p.add_argument("--timestamp-column", default=None, help="optional timestamp column of --data")
    p.add_argument("--name", default=None, help="dataset name for the inline plan")
    p.add_argument("--model", action="append", default=None, help="forecaster spec; repeat for several (inline plan)")


def _add_plan_override_flags(p: argparse.ArgumentParser):
    p.add_argument("--variants", default=None, help="comma-separated subset of clean,gwn,dga")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--epsilon-ratio", type=float, default=None, help="budget as a fraction of the dataset mean")
    group.add_argument("--epsilon-abs", type=float, default=None, help="absolute per-element budget")
    p.add_argument("--probe-scale", type=float, default=None)
    p.add_argument("--convention", choices=["descent", "ascent"], default=None)
    p.add_argument("--directions", type=int, default=None)
    p.add_argument("--loss", choices=["squared", "absolute"], default=None)
    p.add_argument("--gwn-mode", choices=["clipped-gaussian", "sign-matched"], default=None)
    p.add_argument("--history", type=int, default=None)
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--stride", type=int, default=None)
    p.add_argument("--split", default=None, help="train,validation,test fractions")
    p.add_argument("--seed", type=int, default=None, help="master seed")
    p.add_argument("--max-windows", type=int, default=None)
    p.add_argument("--acf-lags", type=int, default=None)
    p.add_argument("--hist-bins", type=int, default=None)


def _parse_split(text: str) -> SplitSpec:
    parts = text.split(",")
    if len(parts) != 3:
        raise _UsageError(f"--split needs three comma-separated fractions, got {text!r}")
    try:
        train, validation, test = (float(p) for p in parts)
        return SplitSpec(train=train, validation=validation, test=test)
    except ValueError as exc:
        raise _UsageError(f"bad --split {text!r}: {exc}") from None


def _parse_ratios(text: str) -> list:
    out = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        try:
            out.append(float(chunk))
        except ValueError:
            raise _UsageError(f"bad ratio {chunk!r} in --ratios") from None
    return out


def _parse_model(text: str) -> ForecasterSpec:
    try:
        return ForecasterSpec.from_string(text)
    except ValueError as exc:
        raise _UsageError(str(exc)) from None


def _resolve_plan(args) -> ExperimentPlan:
    """Pick the plan source (exactly one) and fold flag overrides on top."""
    sources = sum([args.plan is not None, bool(args.bundled_plan), args.data is not None])
    if sources != 1:
        raise _UsageError("give exactly one plan source: --plan FILE, --bundled-plan, or --data + --column + --model")
    if args.plan is not None:
        plan = ExperimentPlan.from_file(args.plan)
    elif args.bundled_plan:
        plan = ExperimentPlan.from_file(bundled_plan_path())
    else:
        if args.column is None or not args.model:
            raise _UsageError("an inline plan needs --data, --column, and at least one --model")
        name = args.name or os.path.splitext(os.path.basename(args.data))[0]
        dataset = DatasetSpec(
            name=name,
            path=args.data,
            column=args.column,
            timestamp_column=args.timestamp_column,
        )
        plan = ExperimentPlan(
            datasets=(dataset,),
            forecasters=tuple(_parse_model(m) for m in args.model),
        )
    return _apply_overrides(plan, args)


def _apply_overrides(plan: ExperimentPlan, args) -> ExperimentPlan:
    attack = plan.attack
    if args.epsilon_ratio is not None:
        attack = replace(attack, epsilon=MeanRatioEpsilon(args.epsilon_ratio))
    if args.epsilon_abs is not None:
        attack = replace(attack, epsilon=AbsoluteEpsilon(args.epsilon_abs))
    if args.probe_scale is not None:
        attack = replace(attack, probe_scale=args.probe_scale)
    if args.convention is not None:
        attack = replace(attack, sign_convention=args.convention)
    if args.directions is not None:
        attack = replace(attack, n_directions=args.directions)
    if args.loss is not None:
        attack = replace(attack, loss=args.loss)
    if args.gwn_mode is not None:
        attack = replace(attack, gwn_mode=args.gwn_mode)

    window = plan.window
    if args.history is not None or args.horizon is not None or args.stride is not None:
        window = WindowSpec(
            history=args.history if args.history is not None else window.history,
            horizon=args.horizon if args.horizon is not None else window.horizon,
            stride=args.stride if args.stride is not None else window.stride,
        )

    updates: dict = {"attack": attack, "window": window}
    if args.split is not None:
        updates["split"] = _parse_split(args.split)
    if args.seed is not None:
        updates["master_seed"] = args.seed
    if args.max_windows is not None:
        updates["max_windows"] = args.max_windows
    if args.acf_lags is not None:
        updates["acf_max_lag"] = args.acf_lags
    if args.hist_bins is not None:
        updates["histogram_bins"] = args.hist_bins
    if args.variants is not None:
        updates["variants"] = tuple(v.strip() for v in args.variants.split(",") if v.strip())
    return replace(plan, **updates)


def _require_out_dir(path: str, force: bool):
    if os.path.isdir(path) and os.listdir(path) and not force:
        raise _UsageError(
            f"output directory {path!r} is not empty; pass --force to write into it"
        )
    if os.path.exists(path) and not os.path.isdir(path):
        raise _UsageError(f"output path {path!r} exists and is not a directory")


def _say(text: str):
    print(text, file=sys.stderr)


# ---------------------------------------------------------------------------
# Handlers


def _cmd_attack(args) -> int:
    spec = _parse_model(args.model)
    split = _parse_split(args.split)
    series = load_csv(args.data, _column_selector(args.column), args.timestamp_column)
    if args.history < 1 or args.horizon < 1:
        raise _UsageError("--history and --horizon must be >= 1")
    if len(series) < args.history:
        raise TsadvError(
            f"series has {len(series)} points; cannot cut a window of {args.history}"
        )
    origin = args.origin if args.origin is not None else len(series) - args.history
    if origin < 0 or origin + args.history > len(series):
        raise TsadvError(
            f"window [{origin}, {origin + args.history}) is out of range for {len(series)} points"
        )
    window = series.values[origin : origin + args.history]

    train = None
    if spec.needs_training:
        train = chronological_split(series, split)[0].values
    forecaster = CountingForecaster(spec.build(train))

    config = AttackConfig(rng_seed=args.seed)
    config = _override_attack_config(config, args)
    example = dga_attack(
        forecaster, window, args.horizon, config, dataset_stats=series_stats(series.values)
    )

    # Diagnostic extras (not part of the attack's own query count): how far
    # the clean and the attacked forecasts sit from the noise target, in the
    # attack's own loss.
    clean_forecast = forecaster.predict(window, args.horizon)
    attacked_forecast = forecaster.predict(example.perturbed_history, args.horizon)
    target = example.target.values
    clean_gap = loss_value(clean_forecast, target, config.loss)
    attacked_gap = loss_value(attacked_forecast, target, config.loss)

    doc = json.dumps(example_to_json(example, origin=origin), sort_keys=True, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(doc + "\n")
        _say(f"wrote {args.out}")
    else:
        print(doc)
    _say(
        f"epsilon={example.epsilon:.6g} queries={example.queries_used} "
        f"target-loss({config.loss}) clean={clean_gap:.6g} attacked={attacked_gap:.6g}"
    )
    return 0


def _override_attack_config(config: AttackConfig, args) -> AttackConfig:
    if args.epsilon_ratio is not None:
        config = replace(config, epsilon=MeanRatioEpsilon(args.epsilon_ratio))
    if args.epsilon_abs is not None:
        config = replace(config, epsilon=AbsoluteEpsilon(args.epsilon_abs))
    if args.probe_scale is not None:
        config = replace(config, probe_scale=args.probe_scale)
    if args.convention is not None:
        config = replace(config, sign_convention=args.convention)
    if args.directions is not None:
        config = replace(config, n_directions=args.directions)
    if args.loss is not None:
        config = replace(config, loss=args.loss)
    return config


def _column_selector(text: str):
    return text  # load_csv prefers header names and falls back to integers


def _cmd_evaluate(args) -> int:
    plan = _resolve_plan(args)
    _require_out_dir(args.out, args.force)
    if args.jobs is not None and args.jobs < 1:
        raise _UsageError(f"--jobs must be >= 1, got {args.jobs}")
    result = run_matrix(plan, jobs=args.jobs)
    write_run_directory(result, args.out)

    for row in result.table():
        _say(
            f"{row.dataset} {row.forecaster} {row.variant}: "
            f"mae={row.mae:.6g} mse={row.mse:.6g} windows={row.windows} "
            f"increase={row.norm_mae_increase:+.4f}"
        )
    for (dataset, forecaster), test in sorted(result.sign_tests().items()):
        _say(
            f"sign test dga-vs-gwn {dataset}/{forecaster}: "
            f"{test.n_first_higher}:{test.n_second_higher} of {test.n_pairs} pairs, "
            f"p={test.p_value:.3g}"
        )
    failures = sum(len(c.failures) for c in result.cells)
    if failures:
        _say(f"failed windows: {failures} (see records.jsonl)")
    _say(f"wrote run directory {args.out}")
    return 0


def _cmd_sweep(args) -> int:
    plan = _resolve_plan(args)
    ratios = _parse_ratios(args.ratios)
    _require_out_dir(args.out, args.force)
    if args.jobs is not None and args.jobs < 1:
        raise _UsageError(f"--jobs must be >= 1, got {args.jobs}")
    rows = sweep_epsilon(plan, ratios, jobs=args.jobs)
    write_sweep_directory(plan, rows, args.out)
    for row in rows:
        _say(
            f"{row.dataset} {row.forecaster} ratio={row.ratio:g} {row.variant}: "
            f"mae={row.mean_mae:.6g} increase={row.norm_mae_increase:+.4f}"
        )
    _say(f"wrote sweep directory {args.out}")
    return 0


def _cmd_remote_check(args) -> int:
    forecaster = RemoteForecaster(
        endpoint=args.url, token=args.token, timeout_ms=args.timeout_ms
    )
    if args.history < 1:
        raise _UsageError("--history must be >= 1")
    # A deterministic, friendly probe series: one plain sine cycle around 10.
    t = np.arange(args.history, dtype=np.float64)
    probe_series = 10.0 + np.sin(2.0 * np.pi * t / max(args.history, 2))
    started = time.perf_counter()
    forecast = forecaster.predict(probe_series, args.horizon)
    elapsed_ms = (time.perf_counter() - started) * 1000.0
    _say(
        f"OK: {forecaster.descriptor} answered {forecast.size} values "
        f"in {elapsed_ms:.1f} ms; horizon honored"
    )
    print(
        json.dumps(
            {
                "status": "ok",
                "endpoint": forecaster.endpoint,
                "horizon": int(args.horizon),
                "values": int(forecast.size),
                "latency_ms": round(elapsed_ms, 3),
            },
            sort_keys=True,
        )
    )
    return 0


def _cmd_stub_serve(args) -> int:
    spec = _parse_model(args.model)
    train = None
    if spec.needs_training:
        if not args.data or args.column is None:
            raise _UsageError(f"model {args.model!r} needs --data and --column to fit")
        series = load_csv(args.data, _column_selector(args.column))
        train = chronological_split(series, _parse_split(args.split))[0].values
    forecaster = spec.build(train)
    server = StubForecastServer(
        forecaster,
        host=args.host,
        port=args.port,
        required_token=args.token,
        mode=args.mode,
    )
    with server:
        _say(f"serving {forecaster.descriptor} at {server.url} (mode={server.mode}); Ctrl-C stops")
        try:
            threading.Event().wait()
        except KeyboardInterrupt:
            _say("stopping")
    return 0


def main(argv: Optional[list] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"tsadv: error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help and friends
        return int(exc.code or 0)
    if getattr(args, "handler", None) is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return int(args.handler(args) or 0)
    except _UsageError as exc:
        print(f"tsadv: error: {exc}", file=sys.stderr)
        return 1
    except (PlanError, InvalidRatioError, InvalidEndpointError) as exc:
        print(f"tsadv: error: {exc}", file=sys.stderr)
        return 1
    except RemoteError as exc:
        print(f"tsadv: remote failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except (TsadvError, OSError, ValueError) as exc:
        print(f"tsadv: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
