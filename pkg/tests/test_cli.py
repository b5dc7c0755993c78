import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from scsgbench.cli import main
from scsgbench.datasets import save_csv, synthetic_multiclass


@pytest.fixture(scope="module")
def dataset_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "toy.csv"
    save_csv(synthetic_multiclass(n=150, p=4, num_classes=3, seed=3), path)
    return str(path)


def _run(args):
    result = CliRunner().invoke(main, args, catch_exceptions=False)
    assert result.exit_code == 0, result.output
    return result


def test_run_requires_data(tmp_path):
    result = CliRunner().invoke(main, ["run", "--out", str(tmp_path)])
    assert result.exit_code != 0
    assert "--data" in result.output


def test_run_sweep_writes_traces_and_summary(dataset_csv, tmp_path):
    out = tmp_path / "bench"
    result = _run([
        "run", "--data", dataset_csv, "--algo", "gd", "--passes", "3",
        "--eta-grid", "-3:0", "--seed", "1", "--out", str(out),
    ])
    assert "provisional" in result.output
    summary = json.loads((out / "summary.json").read_text())
    assert summary["gd"]["best_exponent"] in range(-3, 1)
    assert summary["gd"]["provisional_ratios"] is True
    traces = sorted(p.name for p in out.glob("gd_*.csv"))
    assert traces  # one file per non-divergent grid point
    header = (out / traces[0]).read_text().splitlines()[0]
    assert header == "effective_passes,objective,suboptimality_ratio"


def test_optimum_then_run_uses_calibrated_ratios(dataset_csv, tmp_path):
    out = tmp_path / "bench"
    _run([
        "run", "--data", dataset_csv, "--algo", "scsg", "--passes", "3",
        "--eta-grid", "-2:1", "--out", str(out),
    ])
    _run([
        "optimum", "--data", dataset_csv, "--passes", "30",
        "--eta-grid", "-2:1", "--out", str(out),
    ])
    payload = json.loads((out / "optimum.json").read_text())
    assert payload["f_star"] < payload["f0"]
    assert len(payload["x_star"]) == 4 * 2  # p=4, K=3

    _run([
        "run", "--data", dataset_csv, "--algo", "gd", "--passes", "3",
        "--eta-grid", "-2:0", "--out", str(out),
    ])
    summary = json.loads((out / "summary.json").read_text())
    assert summary["gd"]["provisional_ratios"] is False
    assert summary["gd"]["final_ratio"] is not None
    assert "scsg" in summary  # earlier entry preserved


def test_diagnostics_command(dataset_csv, tmp_path):
    out = tmp_path / "bench"
    needs = CliRunner().invoke(
        main, ["diagnostics", "--data", dataset_csv, "--out", str(out)]
    )
    assert needs.exit_code != 0  # requires optimum.json first

    _run([
        "optimum", "--data", dataset_csv, "--passes", "20", "--eta-c", "1.0",
        "--out", str(out),
    ])
    result = _run(["diagnostics", "--data", dataset_csv, "--out", str(out)])
    diag = json.loads((out / "diagnostics.json").read_text())
    assert diag["D"] == max(diag["D_x"], diag["D_H"])
    assert diag["H"] >= 0


def test_report_command(dataset_csv, tmp_path):
    out = tmp_path / "bench"
    _run([
        "run", "--data", dataset_csv, "--algo", "gd", "--passes", "2",
        "--eta-grid", "-2:0", "--out", str(out),
    ])
    result = _run(["report", "--out", str(out)])
    assert "gd" in result.output
    assert "final ratio" in result.output
    missing = CliRunner().invoke(main, ["report", "--out", str(tmp_path)])
    assert missing.exit_code != 0


def test_config_file_defaults_cli_overrides(dataset_csv, tmp_path):
    out = tmp_path / "bench"
    cfg = tmp_path / "bench.cfg"
    cfg.write_text(f"data={dataset_csv}\npasses=2\neta-grid=-2:0\nalgo=gd\n")
    _run(["run", "--config", str(cfg), "--out", str(out)])
    summary = json.loads((out / "summary.json").read_text())
    assert summary["gd"]["passes"] == 2.0

    # explicit flag wins over the config value
    _run(["run", "--config", str(cfg), "--passes", "4", "--out", str(out)])
    summary = json.loads((out / "summary.json").read_text())
    assert summary["gd"]["passes"] == 4.0

    bad = tmp_path / "bad.cfg"
    bad.write_text("not-a-flag=1\n")
    result = CliRunner().invoke(main, ["run", "--config", str(bad), "--out", str(out)])
    assert result.exit_code != 0
    assert "unknown config key" in result.output


def test_run_deterministic_outputs(dataset_csv, tmp_path):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        _run([
            "run", "--data", dataset_csv, "--algo", "scsg", "--passes", "3",
            "--eta-grid", "-1:1", "--seed", "7", "--out", str(out),
        ])
        outs.append(json.loads((out / "summary.json").read_text()))
    assert outs[0] == outs[1]
