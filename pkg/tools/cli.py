import functools
import sys
from pathlib import Path
from typing import Callable, Optional

import click
from loguru import logger

from seqmine.checkpoint import load_checkpoint
from seqmine.errors import EXIT_OK, exit_code_for
from seqmine.experiments import (
    inspect_attention,
    load_splits,
    prepare_like_checkpoint,
    run_train_task,
    sweep_length,
    sweep_window,
    write_sweep_csv,
    write_synthetic,
)
from seqmine.metrics import write_report_json, write_table_csv
from seqmine.train import evaluate
from seqmine.utils import (
    ArtifactStage,
    atomic_write_text,
    get_latest_checkpoint,
    print_config_tree,
    print_report,
    setup_logging,
)
from seqmine.utils.schema import RunSpec, compose_run_spec


def run_command(func: Callable) -> Callable:
    """Runs a command body and turns any exception into the matching exit code."""

    @functools.wraps(func)
    def wrap(*args, **kwargs):
        try:
            func(*args, **kwargs)
        except click.exceptions.Exit:
            raise
        except click.ClickException:
            raise
        except Exception as e:
            code = exit_code_for(e)
            logger.error(f"{type(e).__name__}: {e}")
            sys.exit(code)

        sys.exit(EXIT_OK)

    return wrap


def _int_list(ctx, param, value: Optional[str]) -> Optional[list[int]]:
    if value is None:
        return None
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma separated integers, got {value!r}")


def common_options(func: Callable) -> Callable:
    options = [
        click.option("--config", "config_file", type=click.Path(path_type=Path), default=None,
                     help="Run-spec file (JSON or YAML) merged over the defaults."),
        click.option("--seed", type=int, default=None),
        click.option("--out", type=click.Path(path_type=Path), default=None, help="Output directory."),
        click.option("--data-train", type=click.Path(path_type=Path), default=None, help="Train split (.ts)."),
        click.option("--data-test", type=click.Path(path_type=Path), default=None, help="Test split (.ts)."),
        click.option("--print-config", is_flag=True, default=False, help="Print the resolved run spec."),
        click.option("--log-level", default="INFO", show_default=True),
        click.argument("overrides", nargs=-1),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def build_spec(
    config_file: Optional[Path],
    seed: Optional[int],
    out: Optional[Path],
    data_train: Optional[Path],
    data_test: Optional[Path],
    overrides: tuple[str, ...],
    print_config: bool = False,
    log_level: str = "INFO",
) -> RunSpec:
    setup_logging(log_level)

    dotlist = list(overrides)
    # explicit flags win over positional overrides
    if seed is not None:
        dotlist.append(f"seed={seed}")
    if out is not None:
        dotlist.append(f"out={out}")
    if data_train is not None:
        dotlist.append(f"data.train={data_train}")
    if data_test is not None:
        dotlist.append(f"data.test={data_test}")

    spec = compose_run_spec(config_file, dotlist)
    if print_config:
        print_config_tree(spec)
    return spec


@click.group()
def cli():
    """Multivariate sequence classification with a BiLSTM and multi-scale windowed attention."""


@cli.command()
@click.option(
    "--resume",
    type=click.Path(path_type=Path),
    default=None,
    help="Checkpoint to continue from, or a directory holding epoch_XXXX.ckpt files.",
)
@common_options
@run_command
def train(resume: Optional[Path], **kwargs):
    """Train a model and write checkpoint, history and reports."""

    spec = build_spec(**kwargs)

    ckpt = None
    if resume is not None:
        path = get_latest_checkpoint(resume) if resume.is_dir() else resume
        if path is None:
            raise FileNotFoundError(f"no checkpoint found under {resume}")
        logger.info(f"Resuming from {path}")
        ckpt = load_checkpoint(path)

    result = run_train_task(spec, resume=ckpt)

    rows = [(f"{spec.label} (train)", result.train_report)]
    if result.test_report is not None:
        rows.append((spec.label, result.test_report))
    print_report("Results", rows)


@cli.command(name="eval")
@click.option("--checkpoint", type=click.Path(path_type=Path), required=True)
@click.option("--split", type=click.Choice(["train", "test"]), default="test", show_default=True)
@common_options
@run_command
def eval_(checkpoint: Path, split: str, **kwargs):
    """Evaluate a checkpoint on one split of the configured data."""

    spec = build_spec(**kwargs)
    ckpt = load_checkpoint(checkpoint)
    params = ckpt.to_model()

    train_set, test_set = load_splits(spec)
    dataset = test_set if split == "test" else train_set
    if dataset is None:
        raise click.UsageError("no test split configured, pass --data-test or use --split train")
    dataset = prepare_like_checkpoint(dataset, ckpt)

    report = evaluate(params, dataset)
    with ArtifactStage(spec.out) as stage:
        write_report_json(report, stage.path(f"eval_{split}.json"))
        write_table_csv([(spec.label, report)], stage.path(f"eval_{split}.csv"))

    print_report(f"Evaluation ({split})", [(spec.label, report)])


@cli.command(name="sweep-length")
@click.option("--lengths", callback=_int_list, default=None, help="Comma separated, e.g. 20,60,100.")
@click.option("--workers", type=int, default=None, help="Parallel grid points.")
@common_options
@run_command
def sweep_length_(lengths: Optional[list[int]], workers: Optional[int], **kwargs):
    """Retrain at every sequence length and report test metrics per length."""

    spec = build_spec(**kwargs)
    lengths = lengths if lengths is not None else list(spec.sweep.lengths)
    rows = sweep_length(spec, lengths, workers or spec.sweep.workers)

    with ArtifactStage(spec.out) as stage:
        write_sweep_csv("length", rows, stage.path("sweep_length.csv"))

    print_report("Sequence length sweep", [(f"L={r.value}", r.report) for r in rows if r.ok])


@cli.command(name="sweep-window")
@click.option("--windows", callback=_int_list, default=None, help="Odd window lengths, e.g. 3,7,11.")
@click.option("--workers", type=int, default=None, help="Parallel grid points.")
@common_options
@run_command
def sweep_window_(windows: Optional[list[int]], workers: Optional[int], **kwargs):
    """Train one single-scale model per window length."""

    spec = build_spec(**kwargs)
    windows = windows if windows is not None else list(spec.sweep.windows)
    rows = sweep_window(spec, windows, workers or spec.sweep.workers)

    with ArtifactStage(spec.out) as stage:
        write_sweep_csv("window", rows, stage.path("sweep_window.csv"))

    print_report("Window sweep", [(f"W={r.value}", r.report) for r in rows if r.ok])


@cli.command()
@common_options
@run_command
def synth(**kwargs):
    """Write the synthetic motif dataset as .ts files."""

    spec = build_spec(**kwargs)
    with ArtifactStage(spec.out) as stage:
        train_set, test_set = write_synthetic(spec, stage)

    logger.info(f"{train_set.name}: {len(train_set)} train / {len(test_set)} test samples")


@cli.command(name="inspect-attention")
@click.option("--checkpoint", type=click.Path(path_type=Path), required=True)
@click.option("--index", type=int, required=True, help="Sample index within the split.")
@click.option("--split", type=click.Choice(["train", "test"]), default="test", show_default=True)
@common_options
@run_command
def inspect_attention_(checkpoint: Path, index: int, split: str, **kwargs):
    """Dump energies and attention weights of every scale for one sample."""

    spec = build_spec(**kwargs)
    ckpt = load_checkpoint(checkpoint)
    params = ckpt.to_model()

    train_set, test_set = load_splits(spec)
    dataset = test_set if split == "test" else train_set
    if dataset is None:
        raise click.UsageError("no test split configured, pass --data-test or use --split train")
    dataset = prepare_like_checkpoint(dataset, ckpt)

    document = inspect_attention(params, dataset, index)
    with ArtifactStage(spec.out) as stage:
        atomic_write_text(stage.path(f"attention_{split}_{index}.json"), document.model_dump_json(indent=2) + "\n")

    logger.info(f"Sample {index}: label {document.label}, predicted {document.predicted_class}")


def main():
    cli()


if __name__ == "__main__":
    main()
