import csv
import io
import math
import time
from pathlib import Path
from typing import Optional

import hydra
import numpy as np
from loguru import logger
from omegaconf import DictConfig, OmegaConf
from pydantic import BaseModel
from tqdm import tqdm

from seqmine.autograd import Graph
from seqmine.callbacks import clip_grad_norm
from seqmine.checkpoint import Checkpoint, save_checkpoint
from seqmine.datasets import SequenceDataset, batches
from seqmine.errors import (
    ConfigValidationError,
    DivergenceError,
    EmptyDatasetError,
    NonFiniteError,
)
from seqmine.metrics import Average, EvalReport, evaluate_predictions
from seqmine.models.bilstm_msa import ModelParams, batch_loss, predict
from seqmine.optim import AdamState, adam_step
from seqmine.utils.file import atomic_write_text
from seqmine.utils.schema import TrainConfig

EVAL_CHUNK = 64


class EpochRecord(BaseModel):
    epoch: int
    loss: float
    acc: float
    precision: float
    recall: float
    eval_loss: Optional[float] = None
    eval_acc: Optional[float] = None
    eval_precision: Optional[float] = None
    eval_recall: Optional[float] = None
    wall_time: float = 0.0


class RunHistory(BaseModel):
    epochs: list[EpochRecord] = []

    def __len__(self) -> int:
        return len(self.epochs)

    @property
    def losses(self) -> list[float]:
        return [r.loss for r in self.epochs]

    @property
    def last(self) -> EpochRecord | None:
        return self.epochs[-1] if self.epochs else None

    def append(self, record: EpochRecord) -> None:
        if self.epochs and record.epoch != self.epochs[-1].epoch + 1:
            raise ValueError(f"epoch {record.epoch} recorded after {self.epochs[-1].epoch}")
        if not math.isfinite(record.loss) or record.loss < 0:
            raise NonFiniteError(f"epoch {record.epoch} loss is {record.loss}")
        self.epochs.append(record)

    def to_json(self, include_timing: bool = False) -> str:
        exclude = None if include_timing else {"epochs": {"__all__": {"wall_time"}}}
        return self.model_dump_json(indent=2, exclude=exclude) + "\n"

    def to_csv(self) -> str:
        """One row per epoch; eval columns only when an eval split was used."""

        columns = ["epoch", "loss", "acc", "precision", "recall"]
        if any(r.eval_acc is not None for r in self.epochs):
            columns += ["eval_loss", "eval_acc", "eval_precision", "eval_recall"]

        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        for r in self.epochs:
            row = r.model_dump()
            writer.writerow(["" if row[c] is None else repr(row[c]) for c in columns])
        return buffer.getvalue()

    def write(self, json_path: str | Path, csv_path: str | Path) -> None:
        atomic_write_text(json_path, self.to_json())
        atomic_write_text(csv_path, self.to_csv())


def evaluate(params: ModelParams, dataset: SequenceDataset, average: Average = "macro") -> EvalReport:
    preds, _ = predict(dataset.samples, params, batch_size=EVAL_CHUNK)
    return evaluate_predictions(preds, dataset.labels, params.args.num_classes, average)


def dataset_loss(params: ModelParams, dataset: SequenceDataset) -> float:
    """Mean cross entropy over the whole dataset, no tape recorded."""

    total = 0.0
    for start in range(0, len(dataset), EVAL_CHUNK):
        chunk = dataset.samples[start : start + EVAL_CHUNK]
        total += batch_loss(chunk, params).item() * len(chunk)
    return total / len(dataset)


class Trainer:
    """Owns the parameters, the Adam moments and the epoch-seed stream of one run.

    The trainer state (moments, RNG, early-stopping counters and the history)
    round-trips through `checkpoint()` / `from_checkpoint()`, so a resumed
    run continues exactly where the saved one stopped.
    """

    def __init__(
        self,
        params: ModelParams,
        config: TrainConfig,
        seed: int,
        checkpoint_dir: Optional[Path] = None,
        meta: Optional[dict] = None,
    ):
        if config.checkpoint_every is not None and checkpoint_dir is None:
            raise ConfigValidationError("train.checkpoint_every needs a checkpoint directory")

        self.params = params
        self.config = config
        self.seed = seed
        self.checkpoint_dir = checkpoint_dir
        self.meta = dict(meta or {})

        self.adam = AdamState()
        self.rng = np.random.default_rng(seed)
        self.epoch = 0
        self.best = math.inf
        self.bad_epochs = 0
        self.stopped = False
        self.history = RunHistory()

    def checkpoint(self) -> Checkpoint:
        return Checkpoint.from_model(
            self.params,
            self.adam,
            epoch=self.epoch,
            rng_state=self.rng.bit_generator.state,
            trainer_state={
                "seed": self.seed,
                "best": None if math.isinf(self.best) else self.best,
                "bad_epochs": self.bad_epochs,
                "stopped": self.stopped,
                "history": self.history.model_dump(mode="json"),
            },
            meta=self.meta,
        )

    @classmethod
    def from_checkpoint(
        cls,
        ckpt: Checkpoint,
        config: TrainConfig,
        checkpoint_dir: Optional[Path] = None,
    ) -> "Trainer":
        state = ckpt.trainer_state
        trainer = cls(
            ckpt.to_model(),
            config,
            seed=state.get("seed", 0),
            checkpoint_dir=checkpoint_dir,
            meta=ckpt.meta,
        )
        trainer.adam = ckpt.adam_state()
        if ckpt.rng_state is not None:
            trainer.rng.bit_generator.state = ckpt.rng_state
        trainer.epoch = ckpt.epoch
        trainer.best = math.inf if state.get("best") is None else state["best"]
        trainer.bad_epochs = state.get("bad_epochs", 0)
        trainer.stopped = state.get("stopped", False)
        trainer.history = RunHistory.model_validate(state.get("history", {}))

        logger.info(f"Resumed trainer at epoch {trainer.epoch} (step {trainer.adam.step})")
        return trainer

    def _train_epoch(self, train_set: SequenceDataset) -> float:
        config = self.config
        named = list(self.params.named_parameters())
        parameters = [p for _, p in named]

        epoch_seed = int(self.rng.integers(0, 2**63 - 1))
        total = 0.0
        for batch in batches(train_set, config.batch_size, epoch_seed):
            self.params.zero_grad()
            with Graph() as graph:
                loss = batch_loss(batch, self.params)
            graph.backward(loss)

            if config.grad_clip is not None:
                norm = clip_grad_norm(parameters, config.grad_clip)
                logger.debug(f"grad norm {norm:.4g}")

            adam_step(named, self.adam, config.lr, config.beta1, config.beta2, config.eps)
            total += loss.item() * len(batch)

        self.params.zero_grad()
        return total / len(train_set)

    def _early_stop(self, value: float) -> bool:
        if value < self.best - self.config.min_delta:
            self.best = value
            self.bad_epochs = 0
        else:
            self.bad_epochs += 1
        return self.bad_epochs >= self.config.patience

    def fit(self, train_set: SequenceDataset, eval_set: Optional[SequenceDataset] = None) -> RunHistory:
        config = self.config
        if config.early_stop_on == "eval_loss" and eval_set is None:
            raise ConfigValidationError("early_stop_on=eval_loss needs an eval split")
        if len(train_set) == 0:
            raise EmptyDatasetError("train split is empty")

        logger.info(
            f"Training {self.params.num_parameters()} parameters on {len(train_set)} samples, "
            f"lr={config.lr}, batch_size={config.batch_size}, max_epochs={config.max_epochs}"
        )

        bar = tqdm(
            total=config.max_epochs,
            initial=self.epoch,
            desc="epochs",
            disable=not config.progress,
            leave=False,
        )
        try:
            while self.epoch < config.max_epochs and not self.stopped:
                last_good = self.checkpoint()
                started = time.perf_counter()

                try:
                    loss = self._train_epoch(train_set)
                    if not math.isfinite(loss):
                        raise NonFiniteError(f"mean loss is {loss}")
                except NonFiniteError as e:
                    raise DivergenceError(
                        f"Training diverged in epoch {self.epoch + 1}: {e}", last_good=last_good
                    ) from e

                self.epoch += 1
                train_report = evaluate(self.params, train_set)
                record = EpochRecord(
                    epoch=self.epoch,
                    loss=loss,
                    acc=train_report.accuracy,
                    precision=train_report.precision,
                    recall=train_report.recall,
                )

                if eval_set is not None:
                    eval_report = evaluate(self.params, eval_set)
                    record.eval_loss = dataset_loss(self.params, eval_set)
                    record.eval_acc = eval_report.accuracy
                    record.eval_precision = eval_report.precision
                    record.eval_recall = eval_report.recall

                record.wall_time = time.perf_counter() - started
                self.history.append(record)

                logger.info(
                    f"epoch {self.epoch}: loss={loss:.6f} acc={record.acc:.4f} "
                    f"precision={record.precision:.4f} recall={record.recall:.4f}"
                    + (f" eval_acc={record.eval_acc:.4f}" if record.eval_acc is not None else "")
                )

                monitored = loss if config.early_stop_on == "train_loss" else record.eval_loss
                if self._early_stop(monitored):
                    self.stopped = True
                    logger.info(
                        f"Early stopping after epoch {self.epoch}: no {config.early_stop_on} "
                        f"improvement for {config.patience} epochs"
                    )

                if config.checkpoint_every is not None and self.epoch % config.checkpoint_every == 0:
                    save_checkpoint(self.checkpoint_dir / f"epoch_{self.epoch:04d}.ckpt", self.checkpoint())

                bar.update(1)
                bar.set_postfix(loss=f"{loss:.4f}", acc=f"{record.acc:.3f}")
        finally:
            bar.close()

        return self.history


def train(
    params: ModelParams,
    train_set: SequenceDataset,
    eval_set: Optional[SequenceDataset] = None,
    config: TrainConfig = TrainConfig(),
    seed: int = 0,
    resume: Optional[Checkpoint] = None,
) -> tuple[ModelParams, RunHistory]:
    """Train `params` in place with Adam; a `resume` checkpoint replaces them."""

    if resume is not None:
        trainer = Trainer.from_checkpoint(resume, config)
    else:
        trainer = Trainer(params, config, seed)

    history = trainer.fit(train_set, eval_set)
    return trainer.params, history


@hydra.main(version_base="1.3", config_path="./configs", config_name="base")
def main(cfg: DictConfig) -> Optional[float]:
    from seqmine.experiments import run_train_task
    from seqmine.utils.schema import validate_run_spec

    spec = validate_run_spec(OmegaConf.to_container(cfg, resolve=True))
    result = run_train_task(spec)

    report = result.test_report or result.train_report
    return report.accuracy


if __name__ == "__main__":
    main()
