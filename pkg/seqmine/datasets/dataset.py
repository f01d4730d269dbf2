from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterator, Literal, Optional

import numpy as np

from seqmine.errors import DomainError, EmptySequenceError, ShapeError

Split = Literal["train", "test"]


@dataclass(frozen=True)
class SequenceSample:
    values: np.ndarray  # [T, d], time-major
    label: int

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ShapeError("sample values must be [T, d]", values.shape)
        if values.shape[0] == 0:
            raise EmptySequenceError()
        if not np.isfinite(values).all():
            raise DomainError("sample contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "label", int(self.label))

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def channels(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class NormStats:
    mean: np.ndarray
    std: np.ndarray

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @staticmethod
    def from_dict(data: dict) -> "NormStats":
        return NormStats(
            mean=np.asarray(data["mean"], dtype=np.float64),
            std=np.asarray(data["std"], dtype=np.float64),
        )


@dataclass(frozen=True)
class SequenceDataset:
    samples: list[SequenceSample]
    class_names: list[str]
    split: Split = "train"
    name: str = "dataset"
    norm_stats: Optional[NormStats] = field(default=None, compare=False)

    def __post_init__(self):
        dims = {s.channels for s in self.samples}
        if len(dims) > 1:
            raise ShapeError("samples disagree on channel count", *[(d,) for d in sorted(dims)])

        for i, s in enumerate(self.samples):
            if not 0 <= s.label < len(self.class_names):
                raise DomainError(
                    f"sample {i} has label {s.label}, only {len(self.class_names)} classes"
                )

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[SequenceSample]:
        return iter(self.samples)

    def __getitem__(self, i: int) -> SequenceSample:
        return self.samples[i]

    @property
    def channels(self) -> int:
        if not self.samples:
            return 0
        return self.samples[0].channels

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    @property
    def labels(self) -> np.ndarray:
        return np.array([s.label for s in self.samples], dtype=np.int64)

    @property
    def lengths(self) -> list[int]:
        return [s.length for s in self.samples]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes)

    def with_samples(self, samples: list[SequenceSample], **changes) -> "SequenceDataset":
        return replace(self, samples=samples, **changes)
