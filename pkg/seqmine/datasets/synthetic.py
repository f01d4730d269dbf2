"""Seeded motif datasets: each class hides one smooth pattern inside Gaussian noise."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
from loguru import logger

from seqmine.errors import ConfigValidationError

from .dataset import SequenceDataset, SequenceSample


@dataclass(frozen=True)
class SynthSpec:
    num_classes: int = 4
    samples_per_class: int = 75
    length: int = 50
    channels: int = 3
    motif_length: int = 10
    noise: float = 0.3
    amplitude: float = 2.0
    seed: int = 7

    def __post_init__(self):
        if self.num_classes < 2:
            raise ConfigValidationError(f"num_classes must be >= 2, got {self.num_classes}")
        if self.samples_per_class < 2:
            # the 2:1 split needs a test sample per class
            raise ConfigValidationError(
                f"samples_per_class must be >= 2, got {self.samples_per_class}"
            )
        if min(self.length, self.channels, self.motif_length) < 1:
            raise ConfigValidationError("length, channels and motif_length must be positive")
        if self.motif_length > self.length:
            raise ConfigValidationError(
                f"motif length {self.motif_length} exceeds sequence length {self.length}"
            )
        if self.noise < 0:
            raise ConfigValidationError(f"noise scale must be >= 0, got {self.noise}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def make_motifs(spec: SynthSpec) -> np.ndarray:
    """One [motif_length, channels] pattern per class, built from Gaussian bumps."""

    rng = np.random.default_rng([spec.seed, 0])
    grid = np.linspace(0.0, 1.0, spec.motif_length)

    shape = (spec.num_classes, spec.channels)
    centers = rng.uniform(0.2, 0.8, size=shape)
    widths = rng.uniform(0.1, 0.3, size=shape)
    signs = rng.choice([-1.0, 1.0], size=shape)
    amplitudes = spec.amplitude * signs * rng.uniform(0.5, 1.0, size=shape)

    # [C, m, d]
    bumps = np.exp(-0.5 * ((grid[None, :, None] - centers[:, None, :]) / widths[:, None, :]) ** 2)
    return amplitudes[:, None, :] * bumps


def synth_motif_dataset(spec: SynthSpec) -> tuple[SequenceDataset, SequenceDataset]:
    """Generate the pool, then split every class 2:1 into train and test."""

    motifs = make_motifs(spec)
    rng = np.random.default_rng([spec.seed, 1])
    class_names = [f"class{k}" for k in range(spec.num_classes)]

    train, test = [], []
    n_train = int(round(2 * spec.samples_per_class / 3))
    n_train = min(max(n_train, 1), spec.samples_per_class - 1)

    for k in range(spec.num_classes):
        pool = []
        for _ in range(spec.samples_per_class):
            values = rng.normal(0.0, 1.0, size=(spec.length, spec.channels)) * spec.noise
            start = int(rng.integers(0, spec.length - spec.motif_length + 1))
            values[start : start + spec.motif_length] += motifs[k]
            pool.append(SequenceSample(values=values, label=k))

        order = rng.permutation(spec.samples_per_class)
        train.extend(pool[i] for i in order[:n_train])
        test.extend(pool[i] for i in order[n_train:])

    name = f"Motif{spec.num_classes}x{spec.length}"
    logger.info(
        f"Generated {name}: {len(train)} train / {len(test)} test samples, seed={spec.seed}"
    )
    return (
        SequenceDataset(samples=train, class_names=class_names, split="train", name=name),
        SequenceDataset(samples=test, class_names=class_names, split="test", name=name),
    )


def nearest_motif_classify(values: np.ndarray, motifs: np.ndarray) -> int:
    """Brute force: the class whose motif best matches some window of `values`."""

    values = np.asarray(values, dtype=np.float64)
    m = motifs.shape[1]
    # [positions, m, d]
    windows = np.lib.stride_tricks.sliding_window_view(values, (m, values.shape[1]))[:, 0]
    distances = ((windows[None, :, :, :] - motifs[:, None, :, :]) ** 2).sum(axis=(2, 3))
    return int(distances.min(axis=1).argmin())
