"""Experiment drivers shared by the CLI and the Hydra entry point."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional, Sequence

import numpy as np
from loguru import logger

from seqmine.checkpoint import Checkpoint, save_checkpoint
from seqmine.datasets import (
    NormStats,
    SequenceDataset,
    apply_znorm,
    make_motifs,
    pad_or_trim_dataset,
    parse_ts,
    synth_motif_dataset,
    write_ts,
    znorm,
)
from seqmine.errors import (
    BoundsError,
    ConfigValidationError,
    DivergenceError,
    DomainError,
    SeqMineError,
)
from seqmine.metrics import EvalReport, write_report_json, write_table_csv
from seqmine.models.bilstm_msa import ModelParams, forward, half_width_of
from seqmine.train import RunHistory, Trainer, evaluate
from seqmine.utils import ArtifactStage, atomic_write_text, task_wrapper, worker_logger
from seqmine.utils.schema import AttentionTraceDocument, RunSpec, ScaleTrace

SweepKind = Literal["length", "window"]


@dataclass
class PreparedData:
    train: SequenceDataset
    test: Optional[SequenceDataset]
    length: Optional[int] = None
    norm_stats: Optional[NormStats] = None

    def meta(self) -> dict:
        return {
            "name": self.train.name,
            "class_names": list(self.train.class_names),
            "length": self.length,
            "norm_stats": None if self.norm_stats is None else self.norm_stats.to_dict(),
        }


@dataclass
class TrainResult:
    params: ModelParams
    history: RunHistory
    train_report: EvalReport
    test_report: Optional[EvalReport]
    checkpoint: Checkpoint


def load_splits(spec: RunSpec) -> tuple[SequenceDataset, Optional[SequenceDataset]]:
    if spec.uses_synthetic:
        return synth_motif_dataset(spec.synth.to_spec(spec.seed))

    train = parse_ts(spec.data.train, split="train")
    test = parse_ts(spec.data.test, split="test") if spec.data.test is not None else None
    if test is not None and test.class_names != train.class_names:
        raise ConfigValidationError(
            f"train and test splits declare different classes: {train.class_names} vs {test.class_names}"
        )
    return train, test


def prepare_data(spec: RunSpec, length: Optional[int] = None) -> PreparedData:
    """Load both splits, pad or trim them to one length, then z-normalise on train."""

    train, test = load_splits(spec)

    length = length if length is not None else spec.data.length
    if length is not None:
        train = pad_or_trim_dataset(train, length)
        test = pad_or_trim_dataset(test, length) if test is not None else None

    stats = None
    if spec.data.normalize:
        if test is not None:
            train, test = znorm(train, test)
        else:
            (train,) = znorm(train)
        stats = train.norm_stats

    return PreparedData(train=train, test=test, length=length, norm_stats=stats)


def prepare_like_checkpoint(dataset: SequenceDataset, ckpt: Checkpoint) -> SequenceDataset:
    """Replay the preprocessing recorded in a checkpoint on a freshly loaded split."""

    meta = ckpt.meta
    class_names = meta.get("class_names")
    if class_names is not None and list(class_names) != list(dataset.class_names):
        raise ConfigValidationError(
            f"dataset classes {dataset.class_names} differ from the checkpoint's {class_names}"
        )

    if meta.get("length") is not None:
        dataset = pad_or_trim_dataset(dataset, meta["length"])
    if meta.get("norm_stats") is not None:
        dataset = apply_znorm(dataset, NormStats.from_dict(meta["norm_stats"]))
    return dataset


def fit_and_evaluate(
    spec: RunSpec,
    data: PreparedData,
    window_lengths: Optional[Sequence[int]] = None,
    checkpoint_dir: Optional[Path] = None,
    eval_during_training: bool = True,
    resume: Optional[Checkpoint] = None,
) -> TrainResult:
    if resume is not None:
        trainer = Trainer.from_checkpoint(resume, spec.train, checkpoint_dir=checkpoint_dir)
        if trainer.params.args.input_dim != data.train.channels:
            raise ConfigValidationError(
                f"checkpoint expects {trainer.params.args.input_dim} channels, data has {data.train.channels}"
            )
    else:
        args = spec.model.to_args(data.train.channels, data.train.num_classes, spec.seed)
        if window_lengths is not None:
            args = dataclasses.replace(args, window_lengths=list(window_lengths))

        params = ModelParams.init(args)
        trainer = Trainer(params, spec.train, spec.seed, checkpoint_dir=checkpoint_dir, meta=data.meta())

    eval_set = data.test
    if not eval_during_training and spec.train.early_stop_on != "eval_loss":
        eval_set = None

    history = trainer.fit(data.train, eval_set)

    train_report = evaluate(trainer.params, data.train)
    test_report = evaluate(trainer.params, data.test) if data.test is not None else None
    return TrainResult(
        params=trainer.params,
        history=history,
        train_report=train_report,
        test_report=test_report,
        checkpoint=trainer.checkpoint(),
    )


def _publish_train(result: TrainResult, stage: ArtifactStage, label: str) -> None:
    save_checkpoint(stage.path("model.ckpt"), result.checkpoint)
    result.history.write(stage.path("history.json"), stage.path("history.csv"))

    rows = [(f"{label} (train)", result.train_report)]
    write_report_json(result.train_report, stage.path("train_report.json"))
    if result.test_report is not None:
        write_report_json(result.test_report, stage.path("report.json"))
        rows = [(label, result.test_report)]
    write_table_csv(rows, stage.path("table.csv"))


@task_wrapper
def run_train_task(spec: RunSpec, resume: Optional[Checkpoint] = None) -> TrainResult:
    """Train on the configured data and publish checkpoint, history and reports to `spec.out`.

    With `resume`, training continues from the saved trainer state up to
    `train.max_epochs`.
    """

    data = prepare_data(spec)
    checkpoint_dir = spec.out / "checkpoints" if spec.train.checkpoint_every is not None else None

    with ArtifactStage(spec.out) as stage:
        try:
            result = fit_and_evaluate(spec, data, checkpoint_dir=checkpoint_dir, resume=resume)
        except DivergenceError as e:
            if e.last_good is not None:
                path = save_checkpoint(spec.out / "last_good.ckpt", e.last_good)
                logger.error(f"Training diverged, last good state kept at {path}")
            raise

        _publish_train(result, stage, spec.label)

    report = result.test_report or result.train_report
    logger.info(
        f"Finished after {len(result.history)} epochs: acc={report.accuracy:.4f} "
        f"precision={report.precision:.4f} recall={report.recall:.4f}"
    )
    return result


@dataclass
class SweepRow:
    value: int
    report: Optional[EvalReport] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.report is not None


def _sweep_point(spec: RunSpec, kind: SweepKind, index: int, value: int) -> SweepRow:
    log = worker_logger(index, f"{'L' if kind == 'length' else 'W'}={value}")
    log.info("Starting grid point")

    try:
        if kind == "length":
            data = prepare_data(spec, length=value)
            result = fit_and_evaluate(spec, data, eval_during_training=False)
        else:
            data = prepare_data(spec)
            result = fit_and_evaluate(spec, data, window_lengths=[value], eval_during_training=False)
    except SeqMineError as e:
        log.error(f"Grid point failed: {e}")
        return SweepRow(value=value, error=f"{type(e).__name__}: {e}")
    except Exception as e:
        log.exception(f"Grid point failed unexpectedly: {e}")
        return SweepRow(value=value, error=f"{type(e).__name__}: {e}")

    report = result.test_report or result.train_report
    log.info(f"acc={report.accuracy:.4f} precision={report.precision:.4f} recall={report.recall:.4f}")
    return SweepRow(value=value, report=report)


def run_sweep(spec: RunSpec, kind: SweepKind, values: Sequence[int], workers: int = 1) -> list[SweepRow]:
    """Retrain from scratch at every grid point with the same seed; rows keep grid order."""

    if not values:
        raise ConfigValidationError(f"{kind} sweep needs at least one grid point")
    for v in values:
        if kind == "window":
            try:
                half_width_of(v)
            except DomainError as e:
                raise ConfigValidationError(str(e)) from e
        elif v < 1:
            raise ConfigValidationError(f"sequence lengths must be >= 1, got {v}")

    if not spec.uses_synthetic and spec.data.test is None:
        logger.warning("No test split configured, sweep metrics are measured on the train split")

    logger.info(f"Sweeping {kind} over {list(values)} with {workers} worker(s)")
    if workers <= 1:
        return [_sweep_point(spec, kind, i, v) for i, v in enumerate(values)]

    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_sweep_point, spec, kind, i, v) for i, v in enumerate(values)]
        return [f.result() for f in futures]


def sweep_length(spec: RunSpec, lengths: Sequence[int], workers: int = 1) -> list[SweepRow]:
    return run_sweep(spec, "length", lengths, workers)


def sweep_window(spec: RunSpec, window_lengths: Sequence[int], workers: int = 1) -> list[SweepRow]:
    """Single-scale models, one per full window length W."""

    return run_sweep(spec, "window", window_lengths, workers)


def format_sweep_csv(column: str, rows: Sequence[SweepRow]) -> str:
    """Metrics as fractions in [0, 1]; failed cells keep empty metrics and the error."""

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow([column, "Acc", "Precision", "Recall", "status"])
    for row in rows:
        if row.ok:
            r = row.report
            writer.writerow([row.value, f"{r.accuracy:.6f}", f"{r.precision:.6f}", f"{r.recall:.6f}", "ok"])
        else:
            writer.writerow([row.value, "", "", "", f"failed: {row.error}"])
    return buffer.getvalue()


def write_sweep_csv(column: str, rows: Sequence[SweepRow], path: str | Path) -> Path:
    return atomic_write_text(path, format_sweep_csv(column, rows))


def inspect_attention(
    params: ModelParams, dataset: SequenceDataset, index: int
) -> AttentionTraceDocument:
    if not 0 <= index < len(dataset):
        raise BoundsError(f"sample index {index} outside [0, {len(dataset)}) of the {dataset.split} split")

    sample = dataset[index]
    prediction = forward(sample.values, params, return_trace=True)
    trace = prediction.trace

    return AttentionTraceDocument(
        sample_index=index,
        split=dataset.split,
        label=sample.label,
        predicted_class=prediction.predicted_class,
        probs=prediction.probs.numpy().tolist(),
        scales=[ScaleTrace(**scale) for scale in trace.to_dict()["scales"]],
    )


def write_synthetic(spec: RunSpec, stage: ArtifactStage) -> tuple[SequenceDataset, SequenceDataset]:
    """`<name>_TRAIN.ts`, `<name>_TEST.ts` and the class motifs as JSON."""

    synth = spec.synth.to_spec(spec.seed)
    train, test = synth_motif_dataset(synth)

    write_ts(train, stage.path(f"{train.name}_TRAIN.ts"))
    write_ts(test, stage.path(f"{test.name}_TEST.ts"))

    motifs = make_motifs(synth)
    document = {
        "spec": synth.to_dict(),
        "class_names": train.class_names,
        "motifs": np.asarray(motifs).tolist(),
    }
    atomic_write_text(stage.path("motifs.json"), json.dumps(document, indent=2) + "\n")
    return train, test
