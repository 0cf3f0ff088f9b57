"""End-to-end command-line checks on the tiny planted fixtures."""

import json
import os

import pytest

from graphair.cli import main
from graphair.data import DatasetError, load_dataset_dir


def run_cli(*argv) -> int:
    return main(list(argv))


FAST = ("--repeats", "1", "--epochs", "2")


def test_make_data_then_validate(tmp_path, capsys):
    root = str(tmp_path / "data")
    assert run_cli("make-data", "--dataset", "nba", "--out", root) == 0
    made = capsys.readouterr().out
    assert "nba" in made

    assert run_cli("validate-data", os.path.join(root, "nba")) == 0
    out = capsys.readouterr().out
    assert "ok: 403 nodes" in out
    assert "|S|=2" in out


def test_validate_data_rejects_tampering(tmp_path, capsys):
    root = str(tmp_path / "data")
    run_cli("make-data", "--dataset", "nba", "--out", root)
    capsys.readouterr()
    edges = os.path.join(root, "nba", "edges.csv")
    with open(edges) as fh:
        lines = fh.readlines()
    with open(edges, "w") as fh:
        fh.writelines(lines[:-10])  # drop ten edges
    with pytest.raises(DatasetError):
        run_cli("validate-data", os.path.join(root, "nba"))


def test_run_writes_artifacts_and_prints_summary(tmp_path, capsys):
    out = str(tmp_path / "run")
    assert run_cli("run", "--dataset", "two-block", "--out", out, *FAST) == 0
    printed = capsys.readouterr().out
    assert "two-block: acc=" in printed
    assert "final losses: adv=" in printed

    for name in ("report.json", "metrics.csv", "results.csv", "trial.json"):
        assert os.path.exists(os.path.join(out, name)), name
    with open(os.path.join(out, "report.json")) as fh:
        payload = json.load(fh)
    assert payload["dataset"] == "two-block"
    assert payload["method"] == "graphair"
    assert payload["config"]["train"]["epochs"] == 2
    assert 0 <= payload["report"]["acc"] <= 100


def test_run_ablation_flags_recorded(tmp_path):
    out = str(tmp_path / "run")
    run_cli("run", "--dataset", "two-block", "--out", out, "--no-ep",
            "--no-fm", *FAST)
    with open(os.path.join(out, "report.json")) as fh:
        payload = json.load(fh)
    assert payload["config"]["train"]["ablate_ep"] is True
    assert payload["config"]["train"]["ablate_fm"] is True


def test_config_file_supplies_defaults_flags_win(tmp_path):
    cfg_path = str(tmp_path / "exp.json")
    with open(cfg_path, "w") as fh:
        json.dump({"dataset": "two-block", "epochs": 1,
                   "loss_weights": {"alpha": 2.0, "beta": 0.3,
                                    "gamma": 0.4, "lambda": 0.5}}, fh)
    out = str(tmp_path / "run")
    # --epochs on the command line overrides the file's value
    assert run_cli("run", "--config", cfg_path, "--out", out,
                   "--epochs", "2", "--repeats", "1") == 0
    with open(os.path.join(out, "report.json")) as fh:
        payload = json.load(fh)
    assert payload["config"]["train"]["epochs"] == 2
    weights = payload["config"]["train"]["loss_weights"]
    assert {k: weights[k] for k in ("alpha", "beta", "gamma", "lambda")} == {
        "alpha": 2.0, "beta": 0.3, "gamma": 0.4, "lambda": 0.5}


def test_dataset_required(tmp_path):
    with pytest.raises(SystemExit, match="--dataset is required"):
        run_cli("run", "--out", str(tmp_path / "x"))


def test_ablate_verb_runs_baseline_and_knockouts(tmp_path, capsys):
    out = str(tmp_path / "ab")
    assert run_cli("ablate", "--dataset", "two-block", "--out", out,
                   "--which", "fm", *FAST) == 0
    printed = capsys.readouterr().out
    assert "full: acc=" in printed
    assert "no-fm: acc=" in printed
    assert os.path.exists(os.path.join(out, "ablate_fm", "report.json"))
    with open(os.path.join(out, "ablate_fm", "report.json")) as fh:
        payload = json.load(fh)
    assert payload["method"] == "graphair-no-fm"
    assert payload["config"]["train"]["ablate_fm"] is True


def test_sweep_epochs_evaluates_checkpoints(tmp_path, capsys):
    out = str(tmp_path / "sweep")
    assert run_cli("sweep-epochs", "--dataset", "two-block", "--out", out,
                   "--at", "1", "2", "--repeats", "1", "--epochs", "2") == 0
    printed = capsys.readouterr().out
    assert "epoch 1: acc=" in printed
    assert "epoch 2: acc=" in printed
    assert os.path.exists(os.path.join(out, "epoch_sweep.csv"))
    assert os.path.exists(os.path.join(out, "epoch_sweep.png"))


def test_analyze_reports_homophily_and_correlations(tmp_path, capsys):
    out = str(tmp_path / "an")
    assert run_cli("analyze", "--dataset", "two-block", "--out", out,
                   *FAST) == 0
    printed = capsys.readouterr().out
    assert "homophily mean: original=" in printed
    assert "of top 10 features" in printed
    analysis_dir = os.path.join(out, "analysis")
    assert os.path.exists(os.path.join(analysis_dir, "claim3.json"))
    assert os.path.exists(os.path.join(analysis_dir, "homophily_hist.png"))


def test_plot_from_report_files(tmp_path, capsys):
    out = str(tmp_path / "run")
    run_cli("run", "--dataset", "two-block", "--out", out, *FAST)
    capsys.readouterr()
    prefix = str(tmp_path / "tradeoff")
    assert run_cli("plot", os.path.join(out, "report.json"),
                   "--out", prefix) == 0
    printed = capsys.readouterr().out
    assert "wrote" in printed
    assert os.path.exists(prefix + ".png")
    assert os.path.exists(prefix + ".csv")


def test_unknown_dataset_fails_loudly(tmp_path):
    with pytest.raises(ValueError, match="unknown dataset"):
        run_cli("run", "--dataset", "nope", "--out", str(tmp_path / "x"))
