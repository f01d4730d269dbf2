from __future__ import annotations

import numpy as np
from loguru import logger

from seqmine.errors import DomainError, EmptyDatasetError

from .dataset import NormStats, SequenceDataset, SequenceSample

STD_FLOOR = 1e-8


def pad_or_trim(sample: SequenceSample, length: int) -> SequenceSample:
    """Keep the first `length` steps, or append zero rows up to `length`."""

    if length < 1:
        raise DomainError(f"target length must be >= 1, got {length}")

    if sample.length == length:
        return sample

    if sample.length > length:
        values = sample.values[:length]
    else:
        pad = np.zeros((length - sample.length, sample.channels))
        values = np.concatenate([sample.values, pad], axis=0)

    return SequenceSample(values=values, label=sample.label)


def pad_or_trim_dataset(dataset: SequenceDataset, length: int) -> SequenceDataset:
    return dataset.with_samples([pad_or_trim(s, length) for s in dataset])


def fit_znorm(train: SequenceDataset) -> NormStats:
    """Per-channel mean and population std over every step of the training split."""

    if len(train) == 0:
        raise EmptyDatasetError("cannot fit normalization on an empty dataset")
    if train.split != "train":
        logger.warning(f"Fitting normalization statistics on the {train.split!r} split")

    rows = np.concatenate([s.values for s in train], axis=0)
    return NormStats(mean=rows.mean(axis=0), std=rows.std(axis=0))


def apply_znorm(dataset: SequenceDataset, stats: NormStats) -> SequenceDataset:
    scale = np.maximum(stats.std, STD_FLOOR)
    samples = [
        SequenceSample(values=(s.values - stats.mean) / scale, label=s.label) for s in dataset
    ]
    return dataset.with_samples(samples, norm_stats=stats)


def znorm(
    train: SequenceDataset, *others: SequenceDataset
) -> tuple[SequenceDataset, ...]:
    """Fit (x - mean) / max(std, 1e-8) on `train` and apply it to every split given.

    Applying the stored statistics a second time transforms again; the
    operation is not idempotent.
    """

    stats = fit_znorm(train)
    logger.debug(f"Normalization stats: mean={stats.mean.tolist()} std={stats.std.tolist()}")
    return tuple(apply_znorm(d, stats) for d in (train, *others))
