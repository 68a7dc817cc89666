"""The command-line surface: fit, crossval, predict, simulate."""

import subprocess
import sys

import numpy as np
import pytest

import fermentwin as fw
from fermentwin.cli import main
from fermentwin.synthetic import informative_prior

SMALL_SCHEDULE = dict(burn_in=500, iterations=1_000, thin=10)


@pytest.fixture
def workspace(tmp_path, bench_records, bench_truth):
    """A config file plus dataset and informative-prior files on disk."""
    data_path = tmp_path / "data.csv"
    fw.save_records(data_path, bench_records)
    prior_path = tmp_path / "prior.csv"
    fw.save_prior(prior_path, informative_prior(bench_truth))
    out_dir = tmp_path / "out"
    config_path = tmp_path / "run.ini"
    config_path.write_text(
        f"""
[dataset]
path = {data_path}
group_key = four_field

[network]
n_hidden = 3

[ranges]
d_min = 0.2
d_max = 2.5
mu_min = 0.05
mu_max = 1.0
lambda_min = 0.0
lambda_max = 8.0

[prior]
preset = informative
informative_path = {prior_path}

[sampler]
burn_in = {SMALL_SCHEDULE['burn_in']}
iterations = {SMALL_SCHEDULE['iterations']}
thin = {SMALL_SCHEDULE['thin']}
seed = 42
initial_scale = 0.1
noise_scale = 0.05
adapt_during_burn_in = true

[crossval]
k = 5

[twin]
plant_seed = 9
plant_n0 = 0.5
ambient_temp_c = 25.0
observation_noise_sd = 0.02
temperature_drift = 0.0
frequencies_hz = 25000, 45000
duties = 0.2, 0.8
burst_modulation_hz = 150
step_h = 1.0
total_h = 12.0
refit_every = 0
horizon_h = 24.0
objective = max_density

[output]
dir = {out_dir}
"""
    )
    return dict(config=config_path, out=out_dir, data=data_path, tmp=tmp_path)


def run_cli(*argv) -> int:
    return main(list(argv))


def test_fit_writes_chain_and_summary(workspace):
    assert run_cli("fit", "--config", str(workspace["config"])) == 0
    chain_path = workspace["out"] / "chain.txt"
    summary = (workspace["out"] / "fit_summary.txt").read_text()
    assert chain_path.exists()
    assert "samples=100\n" in summary
    assert "acceptance_rate=" in summary
    model = fw.load_model(chain_path)
    assert len(model.chain) == 100


def test_fit_is_byte_deterministic(workspace):
    out_a = workspace["tmp"] / "a"
    out_b = workspace["tmp"] / "b"
    assert run_cli("fit", "--config", str(workspace["config"]), "--out-dir", str(out_a)) == 0
    assert run_cli("fit", "--config", str(workspace["config"]), "--out-dir", str(out_b)) == 0
    assert (out_a / "chain.txt").read_bytes() == (out_b / "chain.txt").read_bytes()


def test_seed_override_changes_chain(workspace):
    out_a = workspace["tmp"] / "a"
    out_b = workspace["tmp"] / "b"
    run_cli("fit", "--config", str(workspace["config"]), "--out-dir", str(out_a))
    run_cli("fit", "--config", str(workspace["config"]), "--out-dir", str(out_b),
            "--seed", "43")
    assert (out_a / "chain.txt").read_bytes() != (out_b / "chain.txt").read_bytes()


def test_crossval_writes_metrics_and_scatter(workspace):
    assert run_cli("crossval", "--config", str(workspace["config"])) == 0
    metrics = dict(
        line.split("=", 1)
        for line in (workspace["out"] / "metrics.txt").read_text().splitlines()
    )
    assert metrics["k"] == "5"
    assert float(metrics["mape"]) > 0.0
    assert float(metrics["mse"]) >= 0.0
    assert "fold_4_mse" in metrics
    scatter = (workspace["out"] / "scatter.csv").read_text().splitlines()
    assert scatter[0] == "fold,group_key,t_h,observed_od600,predicted_od600"
    assert len(scatter) == 1 + 108


def test_crossval_k_override(workspace):
    assert run_cli("crossval", "--config", str(workspace["config"]), "--k", "3") == 0
    metrics = (workspace["out"] / "metrics.txt").read_text()
    assert "k=3" in metrics
    assert "fold_2_mse" in metrics and "fold_3_mse" not in metrics


def test_crossval_too_many_folds_fails(workspace, capsys):
    assert run_cli("crossval", "--config", str(workspace["config"]), "--k", "99") == 1
    assert "group" in capsys.readouterr().err


def test_predict_after_fit(workspace):
    run_cli("fit", "--config", str(workspace["config"]))
    code = run_cli(
        "predict", "--config", str(workspace["config"]),
        "--temperature-c", "25", "--frequency-hz", "35000", "--duty", "0.5",
        "--n0", "0.5", "--t-max", "24", "--t-step", "2",
    )
    assert code == 0
    lines = (workspace["out"] / "curve.csv").read_text().splitlines()
    assert lines[0] == "t_h,od_mean,od_lo,od_hi"
    assert len(lines) == 1 + 13
    for line in lines[1:]:
        t, mean, lo, hi = map(float, line.split(","))
        assert lo <= mean + 1e-9 and mean <= hi + 1e-9
        assert 0.5 < mean < 0.5 + 2.5


def test_predict_is_deterministic(workspace):
    run_cli("fit", "--config", str(workspace["config"]))
    args = (
        "predict", "--config", str(workspace["config"]),
        "--temperature-c", "25", "--frequency-hz", "35000", "--duty", "0.5",
        "--n0", "0.5",
    )
    run_cli(*args)
    first = (workspace["out"] / "curve.csv").read_bytes()
    run_cli(*args)
    assert (workspace["out"] / "curve.csv").read_bytes() == first


def test_predict_clamps_out_of_bounds_conditions(workspace):
    run_cli("fit", "--config", str(workspace["config"]))
    with pytest.warns(fw.NormalizationClampWarning):
        code = run_cli(
            "predict", "--config", str(workspace["config"]),
            "--temperature-c", "60", "--frequency-hz", "35000", "--duty", "0.5",
            "--n0", "0.5",
        )
    assert code == 0


def test_predict_without_chain_fails(workspace, capsys):
    code = run_cli(
        "predict", "--config", str(workspace["config"]),
        "--temperature-c", "25", "--frequency-hz", "35000", "--duty", "0.5",
        "--n0", "0.5",
    )
    assert code == 1
    assert "chain" in capsys.readouterr().err


def test_simulate_writes_log(workspace):
    assert run_cli("simulate", "--config", str(workspace["config"])) == 0
    lines = (workspace["out"] / "twinlog.csv").read_text().splitlines()
    assert lines[0].startswith("t_h,temp_c_sensed,freq_hz,duty,od_observed")
    assert len(lines) == 1 + 12


def test_simulate_seed_changes_trace_not_schema(workspace):
    out_a = workspace["tmp"] / "sa"
    out_b = workspace["tmp"] / "sb"
    run_cli("simulate", "--config", str(workspace["config"]), "--out-dir", str(out_a))
    run_cli("simulate", "--config", str(workspace["config"]), "--out-dir", str(out_b),
            "--seed", "77")
    a = (out_a / "twinlog.csv").read_text().splitlines()
    b = (out_b / "twinlog.csv").read_text().splitlines()
    assert a[0] == b[0]
    assert len(a) == len(b)
    assert a[1:] != b[1:]


def test_invalid_schedule_rejected_before_compute(workspace, capsys, tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text(
        workspace["config"].read_text().replace("thin = 10", "thin = 5000")
    )
    assert run_cli("fit", "--config", str(bad)) == 1
    err = capsys.readouterr().err
    assert "iterations" in err or "thin" in err


def test_missing_dataset_named(workspace, capsys, tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text(
        workspace["config"].read_text().replace(
            str(workspace["data"]), str(tmp_path / "missing.csv")
        )
    )
    assert run_cli("fit", "--config", str(bad)) == 1
    assert "missing.csv" in capsys.readouterr().err


def test_missing_config_file(capsys):
    assert run_cli("fit", "--config", "/nonexistent/run.ini") == 1
    assert "config" in capsys.readouterr().err


def test_informative_preset_without_path(workspace, capsys, tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text(
        workspace["config"].read_text().replace("informative_path", "other_key")
    )
    assert run_cli("fit", "--config", str(bad)) == 1
    assert "informative_path" in capsys.readouterr().err


def test_commands_do_not_mutate_inputs(workspace):
    before_data = workspace["data"].read_bytes()
    before_config = workspace["config"].read_bytes()
    run_cli("fit", "--config", str(workspace["config"]))
    run_cli("crossval", "--config", str(workspace["config"]), "--k", "3")
    run_cli("simulate", "--config", str(workspace["config"]))
    assert workspace["data"].read_bytes() == before_data
    assert workspace["config"].read_bytes() == before_config


def test_console_entry_point_runs_in_subprocess(workspace):
    result = subprocess.run(
        [sys.executable, "-m", "fermentwin", "fit", "--config", str(workspace["config"])],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0, result.stderr
    assert (workspace["out"] / "chain.txt").exists()
