"""Command line interface: exit codes, outputs, and the stub server loop."""

import json
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
import requests

from tsadv.cli import main
from tsadv.forecasters.stub import StubForecastServer
from tsadv.forecasters.zoo import PersistenceForecaster
from tsadv.harness.synthetic import synthetic_series


@pytest.fixture
def demo_csv(tmp_path):
    series = synthetic_series(900, 12)
    lines = ["t,value"] + [f"{i},{float(v)!r}" for i, v in enumerate(series.values)]
    path = tmp_path / "demo.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)


# ---------------------------------------------------------------------------
# usage errors


def test_no_arguments_prints_usage(capsys):
    assert main([]) == 1
    assert "usage" in capsys.readouterr().err.lower()


def test_unknown_flag_is_a_usage_error(capsys):
    assert main(["attack", "--frobnicate"]) == 1


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0
    assert "attack" in capsys.readouterr().out


def test_bad_model_string_is_a_usage_error(demo_csv, tmp_path, capsys):
    code = main(
        ["attack", "--data", demo_csv, "--column", "value", "--model", "wizard:3"]
    )
    assert code == 1


# ---------------------------------------------------------------------------
# attack


def test_attack_writes_example_json(demo_csv, tmp_path, capsys):
    out = tmp_path / "example.json"
    code = main(
        [
            "attack",
            "--data",
            demo_csv,
            "--column",
            "value",
            "--model",
            "ar:2",
            "--history",
            "96",
            "--horizon",
            "48",
            "--epsilon-ratio",
            "0.02",
            "--seed",
            "7",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    doc = json.loads(out.read_text(encoding="utf-8"))
    assert doc["queries"] == 2
    assert doc["convention"] == "descent"
    assert len(doc["perturbation"]) == 96
    assert len(doc["target"]) == 48
    magnitudes = {round(abs(v), 15) for v in doc["perturbation"]}
    assert len(magnitudes - {0.0}) == 1  # one shared step size


def test_attack_without_out_prints_json_to_stdout(demo_csv, capsys):
    code = main(
        ["attack", "--data", demo_csv, "--column", "value", "--model", "persistence"]
    )
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["queries"] == 2


def test_attack_missing_csv_is_an_io_error(tmp_path):
    assert main(["attack", "--data", str(tmp_path / "no.csv"), "--column", "v", "--model", "persistence"]) == 2


def test_attack_unparseable_csv_is_a_data_error(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("value\n1.0\noops\n", encoding="utf-8")
    assert main(["attack", "--data", str(bad), "--column", "value", "--model", "persistence"]) == 2


def test_attack_epsilon_flags_are_mutually_exclusive(demo_csv):
    code = main(
        [
            "attack",
            "--data",
            demo_csv,
            "--column",
            "value",
            "--model",
            "persistence",
            "--epsilon-ratio",
            "0.02",
            "--epsilon-abs",
            "0.5",
        ]
    )
    assert code == 1


# ---------------------------------------------------------------------------
# evaluate


def evaluate_args(demo_csv, out, *extra):
    return [
        "evaluate",
        "--data",
        demo_csv,
        "--column",
        "value",
        "--name",
        "demo",
        "--model",
        "persistence",
        "--history",
        "24",
        "--horizon",
        "12",
        "--max-windows",
        "8",
        "--out",
        str(out),
        *extra,
    ]


def test_evaluate_inline_plan_writes_run_directory(demo_csv, tmp_path, capsys):
    out = tmp_path / "run"
    assert main(evaluate_args(demo_csv, out)) == 0
    names = {p.name for p in out.iterdir()}
    assert {"plan.json", "table.csv", "records.jsonl", "radar.csv", "acf", "hist"} <= names
    table = (out / "table.csv").read_text(encoding="utf-8").splitlines()
    # header plus one row per variant for the single forecaster
    assert len(table) == 4
    variants = [line.split(",")[2] for line in table[1:]]
    assert variants == ["clean", "gwn", "dga"]


def test_evaluate_requires_exactly_one_plan_source(demo_csv, tmp_path):
    out = tmp_path / "run"
    args = evaluate_args(demo_csv, out) + ["--bundled-plan"]
    assert main(args) == 1
    assert main(["evaluate", "--out", str(tmp_path / "r2")]) == 1


def test_evaluate_refuses_nonempty_out_dir_without_force(demo_csv, tmp_path):
    out = tmp_path / "run"
    assert main(evaluate_args(demo_csv, out)) == 0
    assert main(evaluate_args(demo_csv, out)) == 1
    assert main(evaluate_args(demo_csv, out, "--force")) == 0


def test_evaluate_out_path_must_not_be_a_file(demo_csv, tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("x", encoding="utf-8")
    assert main(evaluate_args(demo_csv, blocker)) == 1


def test_evaluate_inline_missing_column_is_usage(demo_csv, tmp_path):
    args = [
        "evaluate",
        "--data",
        demo_csv,
        "--model",
        "persistence",
        "--out",
        str(tmp_path / "run"),
    ]
    assert main(args) == 1


def test_evaluate_plan_file_and_jobs_reproduce_bytes(demo_csv, tmp_path):
    plan_doc = {
        "datasets": [{"name": "demo", "path": demo_csv, "column": "value"}],
        "forecasters": [{"kind": "persistence"}, {"kind": "exp_smoothing", "alpha": 0.5}],
        "window": {"history": 24, "horizon": 12},
        "max_windows": 10,
    }
    plan_path = tmp_path / "plan.json"
    plan_path.write_text(json.dumps(plan_doc), encoding="utf-8")

    def run(out, jobs):
        code = main(
            ["evaluate", "--plan", str(plan_path), "--out", str(out), "--jobs", str(jobs)]
        )
        assert code == 0
        return {
            str(p.relative_to(out)): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()
        }

    assert run(tmp_path / "a", 1) == run(tmp_path / "b", 4)


def test_evaluate_rejects_bad_plan_file(tmp_path):
    plan_path = tmp_path / "plan.json"
    plan_path.write_text(json.dumps({"surprise": True}), encoding="utf-8")
    assert main(["evaluate", "--plan", str(plan_path), "--out", str(tmp_path / "run")]) == 1


# ---------------------------------------------------------------------------
# sweep


def test_sweep_writes_curves(demo_csv, tmp_path):
    out = tmp_path / "sweep"
    args = [
        "sweep",
        "--data",
        demo_csv,
        "--column",
        "value",
        "--model",
        "persistence",
        "--history",
        "24",
        "--horizon",
        "12",
        "--max-windows",
        "8",
        "--ratios",
        "0.01,0.02",
        "--out",
        str(out),
    ]
    assert main(args) == 0
    lines = (out / "sweep.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "dataset,forecaster,ratio,variant,mean_mae,norm_mae_increase"
    # two ratios x two attack variants for one forecaster
    assert len(lines) == 5


def test_sweep_rejects_bad_ratio_lists(demo_csv, tmp_path):
    for ratios in ["", "0.02,0.01", "-0.1", "abc"]:
        args = [
            "sweep",
            "--data",
            demo_csv,
            "--column",
            "value",
            "--model",
            "persistence",
            "--ratios",
            ratios,
            "--out",
            str(tmp_path / "s"),
        ]
        assert main(args) == 1


# ---------------------------------------------------------------------------
# remote-check


def test_remote_check_against_live_stub(capsys):
    with StubForecastServer(PersistenceForecaster()) as server:
        code = main(["remote-check", "--url", server.url, "--horizon", "5"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["status"] == "ok"
    assert doc["horizon"] == 5
    assert doc["values"] == 5
    assert doc["latency_ms"] >= 0


def test_remote_check_dead_endpoint_exits_three(capsys):
    code = main(
        ["remote-check", "--url", "http://127.0.0.1:9/forecast", "--timeout-ms", "300"]
    )
    assert code == 3
    assert "remote failure" in capsys.readouterr().err


def test_remote_check_bad_url_is_usage(capsys):
    assert main(["remote-check", "--url", "not-a-url"]) == 1


def test_remote_check_enforces_token(capsys):
    with StubForecastServer(PersistenceForecaster(), required_token="tok") as server:
        assert main(["remote-check", "--url", server.url]) == 3
        assert main(["remote-check", "--url", server.url, "--token", "tok"]) == 0


# ---------------------------------------------------------------------------
# stub-serve (end to end over a real process)


def wait_for(url, deadline=10.0):
    start = time.monotonic()
    while time.monotonic() - start < deadline:
        try:
            requests.post(url, json={"series": [1.0, 2.0], "horizon": 1}, timeout=1)
            return True
        except requests.ConnectionError:
            time.sleep(0.05)
    return False


def test_stub_serve_runs_until_interrupted(tmp_path):
    port = _free_port()
    proc = subprocess.Popen(
        [
            sys.executable,
            "-m",
            "tsadv",
            "stub-serve",
            "--model",
            "seasonal:3",
            "--port",
            str(port),
        ],
        stdout=subprocess.DEVNULL,
        stderr=subprocess.DEVNULL,
    )
    try:
        url = f"http://127.0.0.1:{port}/forecast"
        assert wait_for(url), "stub never came up"
        reply = requests.post(url, json={"series": [1.0, 2.0, 3.0, 4.0], "horizon": 4}, timeout=5)
        assert reply.status_code == 200
        assert reply.json()["forecast"] == [2.0, 3.0, 4.0, 2.0]
    finally:
        proc.terminate()
        proc.wait(timeout=10)


def _free_port():
    import socket

    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def test_stub_serve_rejects_unknown_mode():
    assert main(["stub-serve", "--mode", "flaky"]) == 1
