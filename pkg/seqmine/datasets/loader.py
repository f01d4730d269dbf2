from __future__ import annotations

from typing import Iterator, Sequence

import numpy as np

from seqmine.errors import DomainError, EmptyDatasetError, ShapeError

from .dataset import SequenceDataset, SequenceSample


def batches(
    dataset: SequenceDataset | Sequence[SequenceSample], batch_size: int, seed: int
) -> Iterator[list[SequenceSample]]:
    """One epoch of seeded shuffled batches; the last short batch is kept."""

    if batch_size < 1:
        raise DomainError(f"batch_size must be >= 1, got {batch_size}")
    if len(dataset) == 0:
        raise EmptyDatasetError("cannot batch an empty dataset")

    order = np.random.default_rng(seed).permutation(len(dataset))
    for start in range(0, len(order), batch_size):
        yield [dataset[int(i)] for i in order[start : start + batch_size]]


def stack_batch(samples: Sequence[SequenceSample]) -> tuple[np.ndarray, np.ndarray]:
    """Equal-length samples to X [B, T, d] and labels [B]."""

    if not samples:
        raise EmptyDatasetError("empty batch")

    shapes = {s.values.shape for s in samples}
    if len(shapes) != 1:
        raise ShapeError("batch samples differ in shape", *sorted(shapes))

    X = np.stack([s.values for s in samples])
    labels = np.array([s.label for s in samples], dtype=np.int64)
    return X, labels
