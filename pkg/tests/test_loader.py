import numpy as np
import pytest

from seqmine.datasets import SequenceDataset, SequenceSample, batches, stack_batch
from seqmine.errors import DomainError, EmptyDatasetError, ShapeError


@pytest.fixture
def ten_samples() -> SequenceDataset:
    samples = [SequenceSample(np.full((4, 2), float(i)), label=i % 2) for i in range(10)]
    return SequenceDataset(samples=samples, class_names=["even", "odd"])


def test_batch_sizes(ten_samples):
    assert [len(b) for b in batches(ten_samples, 4, seed=0)] == [4, 4, 2]


def test_same_seed_same_order(ten_samples):
    order = lambda seed: [s.values[0, 0] for b in batches(ten_samples, 3, seed) for s in b]  # noqa: E731
    assert order(5) == order(5)
    assert order(5) != order(6)


def test_every_sample_once(ten_samples):
    seen = sorted(s.values[0, 0] for b in batches(ten_samples, 3, seed=1) for s in b)
    assert seen == [float(i) for i in range(10)]


def test_batches_errors(ten_samples):
    with pytest.raises(DomainError):
        list(batches(ten_samples, 0, seed=0))
    with pytest.raises(EmptyDatasetError):
        list(batches(SequenceDataset(samples=[], class_names=["a", "b"]), 2, seed=0))


def test_stack_batch(ten_samples):
    X, labels = stack_batch(ten_samples.samples[:3])
    assert X.shape == (3, 4, 2)
    assert labels.tolist() == [0, 1, 0]

    ragged = [SequenceSample(np.zeros((3, 2)), 0), SequenceSample(np.zeros((4, 2)), 1)]
    with pytest.raises(ShapeError):
        stack_batch(ragged)
