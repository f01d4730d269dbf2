"""Confusion matrix, accuracy, precision and recall."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Sequence

import numpy as np
from pydantic import BaseModel

from seqmine.errors import BoundsError, EmptyDatasetError, ShapeError
from seqmine.utils.file import atomic_write_text

Average = Literal["macro", "micro", "weighted"]


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # [C, C], rows = true class, columns = predicted

    @property
    def num_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


class EvalReport(BaseModel):
    accuracy: float
    precision: float
    recall: float
    average: Average = "macro"
    per_class_precision: list[float]
    per_class_recall: list[float | None]
    support: list[int]
    num_samples: int
    # classes whose precision fell back to 0 because they were never predicted
    zero_division_classes: list[int] = []
    confusion: list[list[int]]


def confusion(preds: Sequence[int], labels: Sequence[int], num_classes: int) -> ConfusionMatrix:
    preds = np.asarray(preds, dtype=np.int64).reshape(-1)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)

    if preds.shape != labels.shape:
        raise ShapeError("predictions and labels differ in length", preds.shape, labels.shape)

    for name, values in (("prediction", preds), ("label", labels)):
        if values.size and (values.min() < 0 or values.max() >= num_classes):
            raise BoundsError(f"{name} index outside [0, {num_classes})")

    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(counts, (labels, preds), 1)
    return ConfusionMatrix(counts)


def report(cm: ConfusionMatrix, average: Average = "macro") -> EvalReport:
    """Accuracy plus precision/recall averaged over classes.

    Precision of a class that is never predicted counts as 0. Classes that
    appear in neither labels nor predictions are left out of the macro mean;
    recall is averaged over classes present in the labels.
    """

    total = cm.total
    if total == 0:
        raise EmptyDatasetError("cannot report on zero samples")

    counts = cm.counts.astype(np.float64)
    hits = np.diag(counts)
    predicted = counts.sum(axis=0)
    support = counts.sum(axis=1)

    never_predicted = (predicted == 0) & (support > 0)
    precision = np.divide(hits, predicted, out=np.zeros_like(hits), where=predicted > 0)
    recall = np.divide(hits, support, out=np.zeros_like(hits), where=support > 0)

    accuracy = float(hits.sum() / total)
    present = (support > 0) | (predicted > 0)
    labelled = support > 0

    match average:
        case "macro":
            macro_precision = float(precision[present].mean())
            macro_recall = float(recall[labelled].mean())
        case "micro":
            # single-label classification: both collapse to accuracy
            macro_precision = macro_recall = accuracy
        case "weighted":
            weights = support / total
            macro_precision = float((precision * weights).sum())
            macro_recall = float((recall * weights).sum())
        case _:
            raise ValueError(f"Unknown averaging mode: {average}")

    return EvalReport(
        accuracy=accuracy,
        precision=macro_precision,
        recall=macro_recall,
        average=average,
        per_class_precision=precision.tolist(),
        per_class_recall=[float(r) if s > 0 else None for r, s in zip(recall, support)],
        support=support.astype(np.int64).tolist(),
        num_samples=total,
        zero_division_classes=np.flatnonzero(never_predicted).tolist(),
        confusion=cm.counts.tolist(),
    )


def evaluate_predictions(
    preds: Sequence[int], labels: Sequence[int], num_classes: int, average: Average = "macro"
) -> EvalReport:
    return report(confusion(preds, labels, num_classes), average)


TABLE_HEADER = ("model", "Acc", "Precision", "Recall")


def format_table_csv(rows: Sequence[tuple[str, EvalReport]]) -> str:
    """Model name with Acc/Precision/Recall as percentages, two decimals."""

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(TABLE_HEADER)
    for name, r in rows:
        writer.writerow([name, f"{100 * r.accuracy:.2f}", f"{100 * r.precision:.2f}", f"{100 * r.recall:.2f}"])
    return buffer.getvalue()


def write_table_csv(rows: Sequence[tuple[str, EvalReport]], path: str | Path) -> Path:
    return atomic_write_text(path, format_table_csv(rows))


def write_report_json(report_: EvalReport, path: str | Path) -> Path:
    return atomic_write_text(path, report_.model_dump_json(indent=2) + "\n")
