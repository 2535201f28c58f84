"""End-to-end acceptance checks.

Each test prints one PASS or FAIL line (run with -s to see them all) and
covers one contract: perturbation geometry, gradient algebra, closed-form
agreement, the bundled evaluation's effect ordering and significance, the
budget sweep's monotonicity, target whiteness and prediction periodicity,
metric oracles, frozen reference values, byte-level reproducibility, and
the remote-oracle protocol. Everything runs locally; the only network
traffic is loopback HTTP to the bundled stub.
"""

import json
import time
from pathlib import Path

import numpy as np
import pytest

from tsadv.attack import (
    AbsoluteEpsilon,
    AttackConfig,
    dga_attack,
    estimate_gradient,
    example_to_json,
    make_gwn_target,
    sample_probe,
)
from tsadv.cli import main
from tsadv.errors import RemoteHttpError, RemoteTimeoutError, ResponseLengthError
from tsadv.forecasters.base import CountingForecaster
from tsadv.forecasters.remote import RemoteForecaster
from tsadv.forecasters.stub import StubForecastServer
from tsadv.forecasters.zoo import (
    ARForecaster,
    ExpSmoothingForecaster,
    PersistenceForecaster,
    fit_ar,
)
from tsadv.harness.plan import ExperimentPlan, bundled_plan_path
from tsadv.harness.runner import run_cell, run_matrix, sweep_epsilon
from tsadv.harness.synthetic import synthetic_series
from tsadv.metrics import acf, histogram, mae, mse, normalized_mae_increase
from tsadv.series import SplitSpec, chronological_split, make_windows, series_stats

RATIOS = [0.005, 0.01, 0.02, 0.04]


def verdict(tag, ok, detail=""):
    line = f"ACCEPTANCE {tag}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f"  [{detail}]"
    print(line)
    assert ok, line


def bundled_plan():
    return ExperimentPlan.from_file(bundled_plan_path())


def wavy(n=96, seed=0):
    rng = np.random.default_rng(seed)
    return 10.0 + np.sin(2 * np.pi * np.arange(n) / 22.0) + rng.normal(0.0, 0.1, n)


# ---------------------------------------------------------------------------
# C01: the perturbation spends exactly the budget, nowhere more


def test_c01_budget_spent_exactly():
    started = time.perf_counter()
    epsilon = 0.2
    ok = True
    for seed in range(5):
        hist = wavy(seed=seed)
        for directions in (1, 3):
            config = AttackConfig(
                epsilon=AbsoluteEpsilon(epsilon), rng_seed=seed, n_directions=directions
            )
            example = dga_attack(ExpSmoothingForecaster(0.5), hist, 48, config)
            rho = example.perturbation
            ok &= bool(np.all(np.abs(rho) <= epsilon + 1e-12))
            moved = rho != 0.0
            # a zero gradient coordinate stays untouched; every other
            # coordinate sits exactly on the budget boundary
            ok &= bool(np.all(np.abs(rho[moved]) == epsilon))
            ok &= bool(np.any(moved))
    # an input-insensitive oracle yields a zero surrogate, so no coordinate
    # moves at all
    from tsadv.forecasters.zoo import ConstantForecaster

    frozen = dga_attack(
        ConstantForecaster(5.0), wavy(), 48, AttackConfig(epsilon=AbsoluteEpsilon(epsilon))
    )
    ok &= bool(np.all(frozen.perturbation == 0.0))
    ok &= frozen.queries_used == 2
    elapsed = time.perf_counter() - started
    ok &= elapsed < 1.0
    verdict("C01 perturbation-budget", ok, f"{elapsed:.3f}s")


# ---------------------------------------------------------------------------
# C02: every coordinate of the surrogate explains the whole loss change


def test_c02_gradient_algebra_thousand_cases():
    started = time.perf_counter()
    rng = np.random.default_rng(1)
    forecaster = ExpSmoothingForecaster(0.3)
    worst = 0.0
    for _ in range(1000):
        hist = rng.normal(rng.uniform(-5, 5), rng.uniform(0.5, 3.0), 16)
        stats = series_stats(hist)
        target = make_gwn_target(4, stats, seed=int(rng.integers(2**32)))
        probe = sample_probe(16, stats, 1e-3, seed=int(rng.integers(2**32)))
        est = estimate_gradient(forecaster, hist, target, probe)
        delta = est.loss_at_probe - est.loss_at_base
        err = float(np.max(np.abs(est.values * probe.values - delta)))
        worst = max(worst, err / (1.0 + abs(delta)))
    elapsed = time.perf_counter() - started
    ok = worst <= 1e-9 and elapsed < 5.0
    verdict("C02 gradient-algebra", ok, f"worst {worst:.2e}, {elapsed:.2f}s")


# ---------------------------------------------------------------------------
# C03: tiny probes against a flat forecaster match the closed form


def test_c03_closed_form_agreement():
    worst = 0.0
    for case in range(100):
        rng = np.random.default_rng(10_000 + case)
        hist = rng.normal(10.0, 3.0, 96)
        stats = series_stats(hist)
        target = make_gwn_target(48, stats, seed=case)
        probe = sample_probe(96, stats, 1e-4, seed=case + 500)
        est = estimate_gradient(PersistenceForecaster(), hist, target, probe, "squared")
        observed = est.loss_at_probe - est.loss_at_base
        theta = probe.values[-1]
        predicted = 2.0 * theta * (hist[-1] - float(np.mean(target.values))) + theta**2
        rel = abs(observed - predicted) / max(abs(predicted), 1e-15)
        worst = max(worst, rel)
    ok = worst <= 1e-4
    verdict("C03 closed-form", ok, f"worst rel err {worst:.2e}")


# ---------------------------------------------------------------------------
# C04: on the bundled data the attack beats noise beats clean, significantly


def test_c04_bundled_evaluation_ordering():
    started = time.perf_counter()
    result = run_matrix(bundled_plan())
    table = {(r.forecaster, r.variant): r for r in result.table()}
    tests = result.sign_tests()
    ok = True
    details = []
    for forecaster in ("ar2", "expsmooth-0.95"):
        clean = table[(forecaster, "clean")]
        gwn = table[(forecaster, "gwn")]
        dga = table[(forecaster, "dga")]
        ok &= min(clean.windows, gwn.windows, dga.windows) >= 50
        ok &= dga.mae > gwn.mae > clean.mae
        sign = tests[("synthetic", forecaster)]
        ok &= sign.p_value < 0.05
        ok &= sign.n_first_higher > sign.n_second_higher
        details.append(
            f"{forecaster}: {clean.mae:.4f} < {gwn.mae:.4f} < {dga.mae:.4f}, p={sign.p_value:.2e}"
        )
    elapsed = time.perf_counter() - started
    ok &= elapsed < 60.0
    verdict("C04 attack-beats-noise", ok, "; ".join(details) + f", {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# C05: the attack's damage dominates noise at every budget and grows with it


def test_c05_budget_sweep_dominance_and_monotonicity():
    started = time.perf_counter()
    rows = sweep_epsilon(bundled_plan(), RATIOS)
    curves = {}
    for row in rows:
        curves.setdefault((row.forecaster, row.variant), {})[row.ratio] = row.norm_mae_increase
    ok = True
    details = []
    for forecaster in ("ar2", "expsmooth-0.95"):
        dga = np.array([curves[(forecaster, "dga")][r] for r in RATIOS])
        gwn = np.array([curves[(forecaster, "gwn")][r] for r in RATIOS])
        ok &= bool(np.all(dga > gwn))
        ok &= bool(np.all(np.diff(dga) > 0))
        ranks = np.argsort(np.argsort(dga))
        rho = float(np.corrcoef(ranks, np.arange(len(RATIOS)))[0, 1])
        ok &= rho == 1.0
        details.append(f"{forecaster} dga {np.round(dga, 3).tolist()} vs gwn {np.round(gwn, 3).tolist()}")
    elapsed = time.perf_counter() - started
    ok &= elapsed < 120.0
    verdict("C05 budget-sweep", ok, "; ".join(details) + f", {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# C06: noise targets are white; clean seasonal predictions are not


def test_c06_whiteness_and_periodicity():
    stats = series_stats(np.array([8.0, 12.0]))
    target = make_gwn_target(10_000, stats, seed=0)
    peak = max(abs(v) for _, v in acf(target.values, 20).rows())
    white_ok = peak < 0.03

    series = synthetic_series(
        2200, 1, amplitude=1.0, period=22.0, offset=10.0, ar_coef=0.0, noise_sd=1e-6
    )
    train, _, test = chronological_split(series, SplitSpec())
    forecaster = ARForecaster(fit_ar(train.values, 2))
    predictions = np.concatenate(
        [forecaster.predict(w.history, 48) for w in make_windows(test, 96, 48)]
    )
    seasonal = acf(predictions, 48).value_at(22)
    periodic_ok = seasonal > 0.5

    verdict(
        "C06 whiteness-and-periodicity",
        white_ok and periodic_ok,
        f"target peak {peak:.4f} < 0.03, prediction acf(22) {seasonal:.3f} > 0.5",
    )


# ---------------------------------------------------------------------------
# C07: metrics agree with direct numpy recomputation


def test_c07_metric_oracles_thousand_vectors():
    rng = np.random.default_rng(7)
    worst_paired, worst_acf = 0.0, 0.0
    hist_ok = True
    for _ in range(1000):
        n = int(rng.integers(21, 120))
        a = rng.normal(rng.uniform(-10, 10), rng.uniform(0.1, 5.0), n)
        b = rng.normal(rng.uniform(-10, 10), rng.uniform(0.1, 5.0), n)
        worst_paired = max(worst_paired, abs(mse(a, b) - float(np.mean((a - b) ** 2))))
        worst_paired = max(worst_paired, abs(mae(a, b) - float(np.mean(np.abs(a - b)))))
        c = a - a.mean()
        denom = float(np.sum(c * c))
        curve = acf(a, 20)
        for k in range(1, 21):
            direct = float(np.sum(c[:-k] * c[k:]) / denom)
            worst_acf = max(worst_acf, abs(curve.value_at(k) - direct))
        counts, edges = np.histogram(a, bins=13)
        summary = histogram(a, 13)
        hist_ok &= bool(np.array_equal(summary.counts, counts) and np.allclose(summary.edges, edges))
    ok = worst_paired <= 1e-12 and worst_acf <= 1e-10 and hist_ok
    verdict("C07 metric-oracles", ok, f"paired {worst_paired:.1e}, acf {worst_acf:.1e}")


# ---------------------------------------------------------------------------
# C08: frozen reference values of the headline metric


def test_c08_normalized_increase_reference_values():
    first = normalized_mae_increase(0.213, 0.249)
    second = normalized_mae_increase(0.202, 0.232)
    ok = abs(first - 0.1690) <= 5e-4 and abs(second - 0.1485) <= 5e-4
    verdict("C08 frozen-references", ok, f"{first:.6f}, {second:.6f}")


# ---------------------------------------------------------------------------
# C09: the bundled evaluation reproduces byte for byte, any worker count


def read_tree(root):
    return {
        str(p.relative_to(root)): p.read_bytes() for p in sorted(Path(root).rglob("*")) if p.is_file()
    }


def test_c09_evaluation_is_byte_reproducible(tmp_path):
    trees = []
    for name, jobs in (("a", 1), ("b", 1), ("c", 3)):
        out = tmp_path / name
        code = main(["evaluate", "--bundled-plan", "--out", str(out), "--jobs", str(jobs)])
        assert code == 0
        trees.append(read_tree(out))
    ok = trees[0] == trees[1] == trees[2] and len(trees[0]) > 5
    verdict("C09 byte-reproducible", ok, f"{len(trees[0])} files compared across 3 runs")


# ---------------------------------------------------------------------------
# C10: remote oracles behave exactly like local ones, failures stay typed


def test_c10_remote_protocol_end_to_end():
    plan = bundled_plan()
    series = synthetic_series(600, 3, name="synthetic")
    windows = make_windows(series, 96, 48)[:3]
    stats = series_stats(series.values)
    config = AttackConfig(epsilon=AbsoluteEpsilon(0.2))

    with StubForecastServer(PersistenceForecaster()) as server:
        remote = RemoteForecaster(server.url)

        # per-window query budget over the wire
        counted = CountingForecaster(remote)
        example = dga_attack(counted, windows[0].history, 48, config)
        queries_ok = example.queries_used == 2 and counted.ledger.count == 2

        # bit-identical to running the same forecaster in process
        identical = True
        for window in windows:
            local = dga_attack(PersistenceForecaster(), window.history, 48, config)
            wired = dga_attack(RemoteForecaster(server.url), window.history, 48, config)
            identical &= bool(np.array_equal(local.perturbation, wired.perturbation))
            identical &= example_to_json(local) == example_to_json(wired)

        # whole-cell agreement on every numeric field
        def cell_with(forecaster):
            return run_cell(
                forecaster,
                windows,
                "dga",
                dataset_name="synthetic",
                dataset_stats=stats,
                plan=plan,
            )

        local_cell = cell_with(PersistenceForecaster())
        remote_cell = cell_with(RemoteForecaster(server.url))
        numeric = lambda c: [
            (r.origin, r.mse, r.mae, r.queries, r.seed, r.epsilon) for r in c.records
        ]
        identical &= numeric(local_cell) == numeric(remote_cell)

    hist = windows[0].history
    failures_ok = True
    with StubForecastServer(PersistenceForecaster(), mode="short") as server:
        with pytest.raises(ResponseLengthError):
            RemoteForecaster(server.url).predict(hist, 4)
    with StubForecastServer(PersistenceForecaster(), mode="error") as server:
        with pytest.raises(RemoteHttpError):
            RemoteForecaster(server.url).predict(hist, 4)
    with StubForecastServer(PersistenceForecaster(), mode="hang", hang_seconds=5.0) as server:
        with pytest.raises(RemoteTimeoutError):
            RemoteForecaster(server.url, timeout_ms=200).predict(hist, 4)
    distinct = (
        not issubclass(ResponseLengthError, RemoteHttpError)
        and not issubclass(RemoteHttpError, RemoteTimeoutError)
        and not issubclass(RemoteTimeoutError, ResponseLengthError)
    )

    ok = queries_ok and identical and failures_ok and distinct
    verdict("C10 remote-protocol", ok, "2 queries/window, local==remote, 3 typed failures")
