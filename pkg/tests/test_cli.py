import csv
import json
import sys

import numpy as np
import pytest
from click.testing import CliRunner
from loguru import logger

import seqmine.experiments as experiments
from seqmine.checkpoint import load_checkpoint
from seqmine.errors import (
    ConfigValidationError,
    DivergenceError,
    EXIT_DIVERGENCE,
    EXIT_IO,
    EXIT_UNEXPECTED,
    EXIT_VALIDATION,
    TsFormatError,
    exit_code_for,
)
from seqmine.utils import setup_logging
from seqmine.utils.schema import AttentionTraceDocument
from tools.cli import cli


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


def invoke(runner, *args):
    return runner.invoke(cli, [str(a) for a in args], catch_exceptions=False)


def read_rows(path) -> list[dict]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


@pytest.fixture
def trained(runner, tiny_run_config, tmp_path):
    out = tmp_path / "run"
    result = invoke(runner, "train", "--config", tiny_run_config, "--out", out)
    assert result.exit_code == 0, result.output
    return out


def test_train_writes_artifacts(trained):
    for name in ("model.ckpt", "history.json", "history.csv", "train_report.json", "report.json", "table.csv"):
        assert (trained / name).is_file(), name

    rows = read_rows(trained / "history.csv")
    assert [r["epoch"] for r in rows] == ["1", "2"]
    assert all(np.isfinite(float(r["loss"])) for r in rows)

    table = read_rows(trained / "table.csv")
    assert table[0]["model"] == "BiLSTM + Multi-Scale Attention"
    assert 0.0 <= float(table[0]["Acc"]) <= 100.0

    ckpt = load_checkpoint(trained / "model.ckpt")
    assert ckpt.epoch == 2
    assert ckpt.meta["class_names"] == ["class0", "class1"]


def test_same_seed_same_history_bytes(runner, tiny_run_config, tmp_path):
    for name in ("a", "b"):
        assert invoke(runner, "train", "--config", tiny_run_config, "--out", tmp_path / name).exit_code == 0

    assert (tmp_path / "a" / "history.csv").read_bytes() == (tmp_path / "b" / "history.csv").read_bytes()
    assert (tmp_path / "a" / "history.json").read_bytes() == (tmp_path / "b" / "history.json").read_bytes()


def test_missing_data_file_is_an_io_error(runner, tiny_run_config, tmp_path):
    out = tmp_path / "run"
    result = invoke(
        runner, "train", "--config", tiny_run_config, "--data-train", tmp_path / "absent_TRAIN.ts", "--out", out
    )
    assert result.exit_code == EXIT_IO
    assert not out.exists()


def test_invalid_override_is_a_validation_error(runner, tiny_run_config, tmp_path):
    out = tmp_path / "run"
    assert invoke(runner, "train", "--config", tiny_run_config, "--out", out, "train.lr=-1").exit_code == 2
    assert invoke(runner, "train", "--config", tiny_run_config, "--out", out, "model.depth=3").exit_code == 2
    assert not out.exists()


def test_flags_win_over_overrides(runner, tiny_run_config, tmp_path):
    out = tmp_path / "flag"
    result = invoke(runner, "synth", "--config", tiny_run_config, "--out", out, f"out={tmp_path / 'positional'}")
    assert result.exit_code == 0
    assert out.is_dir()
    assert not (tmp_path / "positional").exists()


def test_synth_then_train_on_ts_files(runner, tiny_run_config, tmp_path):
    data = tmp_path / "data"
    assert invoke(runner, "synth", "--config", tiny_run_config, "--out", data).exit_code == 0

    train_file, test_file = data / "Motif2x12_TRAIN.ts", data / "Motif2x12_TEST.ts"
    assert train_file.is_file() and test_file.is_file()
    motifs = json.loads((data / "motifs.json").read_text())
    assert np.asarray(motifs["motifs"]).shape == (2, 4, 2)

    out = tmp_path / "run"
    result = invoke(
        runner,
        "train",
        "--config", tiny_run_config,
        "--data-train", train_file,
        "--data-test", test_file,
        "--out", out,
    )
    assert result.exit_code == 0
    assert (out / "report.json").is_file()


def test_eval_command(runner, trained, tiny_run_config, tmp_path):
    out = tmp_path / "eval"
    result = invoke(runner, "eval", "--checkpoint", trained / "model.ckpt", "--config", tiny_run_config, "--out", out)
    assert result.exit_code == 0

    evaluated = json.loads((out / "eval_test.json").read_text())
    trained_report = json.loads((trained / "report.json").read_text())
    assert evaluated["accuracy"] == trained_report["accuracy"]
    assert evaluated["confusion"] == trained_report["confusion"]


def test_eval_with_corrupt_checkpoint(runner, tiny_run_config, tmp_path):
    bad = tmp_path / "bad.ckpt"
    bad.write_bytes(b"not a checkpoint")
    result = invoke(runner, "eval", "--checkpoint", bad, "--config", tiny_run_config, "--out", tmp_path / "x")
    assert result.exit_code == EXIT_IO


def test_inspect_attention(runner, trained, tiny_run_config, tmp_path):
    out = tmp_path / "inspect"
    result = invoke(
        runner,
        "inspect-attention",
        "--checkpoint", trained / "model.ckpt",
        "--index", 1,
        "--config", tiny_run_config,
        "--out", out,
    )
    assert result.exit_code == 0

    document = AttentionTraceDocument.model_validate_json((out / "attention_test_1.json").read_text())
    assert document.sample_index == 1
    assert sum(document.probs) == pytest.approx(1.0, abs=1e-12)

    (scale,) = document.scales
    assert (scale.window_length, scale.half_width) == (3, 1)
    e, alpha = np.asarray(scale.energies), np.asarray(scale.weights)
    assert e.shape == alpha.shape == (12,)
    for t in range(12):
        window = np.exp(e[max(0, t - 1) : t + 2]).sum()
        assert alpha[t] * window == pytest.approx(np.exp(e[t]), abs=1e-12)


def test_inspect_attention_index_out_of_range(runner, trained, tiny_run_config, tmp_path):
    result = invoke(
        runner,
        "inspect-attention",
        "--checkpoint", trained / "model.ckpt",
        "--index", 1000,
        "--config", tiny_run_config,
        "--out", tmp_path / "inspect",
    )
    assert result.exit_code == EXIT_VALIDATION


def test_sweep_length(runner, tiny_run_config, tmp_path):
    out = tmp_path / "sweep"
    assert invoke(runner, "sweep-length", "--config", tiny_run_config, "--out", out).exit_code == 0

    rows = read_rows(out / "sweep_length.csv")
    assert [r["length"] for r in rows] == ["8", "12"]
    for r in rows:
        assert r["status"] == "ok"
        assert all(0.0 <= float(r[k]) <= 1.0 for k in ("Acc", "Precision", "Recall"))


def test_sweep_length_is_reproducible(runner, tiny_run_config, tmp_path):
    for name in ("a", "b"):
        assert invoke(runner, "sweep-length", "--config", tiny_run_config, "--out", tmp_path / name).exit_code == 0

    assert (tmp_path / "a" / "sweep_length.csv").read_bytes() == (tmp_path / "b" / "sweep_length.csv").read_bytes()


def test_repeated_grid_point_gives_identical_rows(runner, tiny_run_config, tmp_path):
    out = tmp_path / "sweep"
    assert invoke(runner, "sweep-length", "--config", tiny_run_config, "--lengths", "8,8", "--out", out).exit_code == 0

    first, second = read_rows(out / "sweep_length.csv")
    assert first == second
    assert first["status"] == "ok"


def test_singleton_length_sweep_matches_plain_training(runner, tiny_run_config, tmp_path):
    assert invoke(
        runner, "train", "--config", tiny_run_config, "--out", tmp_path / "train", "data.length=8"
    ).exit_code == 0
    assert invoke(
        runner, "sweep-length", "--config", tiny_run_config, "--lengths", "8", "--out", tmp_path / "sweep"
    ).exit_code == 0

    report = json.loads((tmp_path / "train" / "report.json").read_text())
    (row,) = read_rows(tmp_path / "sweep" / "sweep_length.csv")
    assert row["Acc"] == f"{report['accuracy']:.6f}"
    assert row["Precision"] == f"{report['precision']:.6f}"
    assert row["Recall"] == f"{report['recall']:.6f}"


def test_parallel_sweep_matches_serial(runner, tiny_run_config, tmp_path):
    for name, workers in (("serial", 1), ("parallel", 2)):
        result = invoke(
            runner, "sweep-length", "--config", tiny_run_config, "--workers", workers, "--out", tmp_path / name
        )
        assert result.exit_code == 0

    serial = (tmp_path / "serial" / "sweep_length.csv").read_bytes()
    assert (tmp_path / "parallel" / "sweep_length.csv").read_bytes() == serial


def test_sweep_window(runner, tiny_run_config, tmp_path):
    out = tmp_path / "sweep"
    result = invoke(runner, "sweep-window", "--config", tiny_run_config, "--windows", "1,3", "--out", out)
    assert result.exit_code == 0

    rows = read_rows(out / "sweep_window.csv")
    assert [r["window"] for r in rows] == ["1", "3"]
    assert {r["status"] for r in rows} == {"ok"}


def test_failed_grid_point_does_not_stop_the_sweep(runner, tiny_run_config, tmp_path, monkeypatch):
    real = experiments.prepare_data

    def prepare_data(spec, length=None):
        if length == 8:
            raise ValueError("cannot build the L=8 split")
        return real(spec, length=length)

    monkeypatch.setattr(experiments, "prepare_data", prepare_data)
    out = tmp_path / "sweep"
    assert invoke(runner, "sweep-length", "--config", tiny_run_config, "--workers", 1, "--out", out).exit_code == 0

    failed, ok = read_rows(out / "sweep_length.csv")
    assert failed["length"] == "8"
    assert failed["status"] == "failed: ValueError: cannot build the L=8 split"
    assert failed["Acc"] == ""
    assert (ok["length"], ok["status"]) == ("12", "ok")


def test_even_window_is_rejected(runner, tiny_run_config, tmp_path):
    out = tmp_path / "sweep"
    result = invoke(runner, "sweep-window", "--config", tiny_run_config, "--windows", "3,4", "--out", out)
    assert result.exit_code == EXIT_VALIDATION
    assert not out.exists()


def test_singleton_window_sweep_matches_plain_training(runner, tiny_run_config, tmp_path):
    # tiny_run_config trains a single W=3 scale already
    assert invoke(runner, "train", "--config", tiny_run_config, "--out", tmp_path / "train").exit_code == 0
    assert invoke(
        runner, "sweep-window", "--config", tiny_run_config, "--windows", "3", "--out", tmp_path / "sweep"
    ).exit_code == 0

    report = json.loads((tmp_path / "train" / "report.json").read_text())
    (row,) = read_rows(tmp_path / "sweep" / "sweep_window.csv")
    assert row["Acc"] == f"{report['accuracy']:.6f}"
    assert row["Recall"] == f"{report['recall']:.6f}"


def test_resume_from_checkpoint_directory(runner, tiny_run_config, tmp_path):
    first = tmp_path / "first"
    assert invoke(
        runner, "train", "--config", tiny_run_config, "--out", first, "train.checkpoint_every=1"
    ).exit_code == 0
    assert (first / "checkpoints" / "epoch_0002.ckpt").is_file()

    second = tmp_path / "second"
    result = invoke(
        runner,
        "train",
        "--config", tiny_run_config,
        "--resume", first / "checkpoints",
        "--out", second,
        "train.max_epochs=3",
    )
    assert result.exit_code == 0
    assert [r["epoch"] for r in read_rows(second / "history.csv")] == ["1", "2", "3"]
    assert read_rows(second / "history.csv")[:2] == read_rows(first / "history.csv")


def test_resume_from_empty_directory(runner, tiny_run_config, tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    result = invoke(runner, "train", "--config", tiny_run_config, "--resume", empty, "--out", tmp_path / "x")
    assert result.exit_code == EXIT_IO


def test_print_config(runner, tiny_run_config, tmp_path):
    result = invoke(runner, "synth", "--config", tiny_run_config, "--out", tmp_path / "d", "--print-config")
    assert result.exit_code == 0
    assert "CONFIG" in result.output
    assert "window_lengths" in result.output


@pytest.mark.parametrize(
    "error, code",
    [
        (ConfigValidationError("bad"), EXIT_VALIDATION),
        (TsFormatError("empty body", "x.ts", 4), EXIT_VALIDATION),
        (FileNotFoundError("x.ts"), EXIT_IO),
        (DivergenceError("nan"), EXIT_DIVERGENCE),
        (RuntimeError("boom"), EXIT_UNEXPECTED),
    ],
)
def test_exit_codes(error, code):
    assert exit_code_for(error) == code


def test_setup_logging_filters_below_level(capsys):
    try:
        setup_logging("warning")
        logger.info("quiet epoch")
        logger.warning("loud epoch")
        err = capsys.readouterr().err
    finally:
        logger.remove()
        logger.add(sys.__stderr__)

    assert "loud epoch" in err
    assert "quiet epoch" not in err
