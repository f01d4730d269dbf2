import numpy as np
import pytest

from seqmine.datasets import (
    SequenceDataset,
    SequenceSample,
    apply_znorm,
    fit_znorm,
    pad_or_trim,
    pad_or_trim_dataset,
    znorm,
)
from seqmine.errors import DomainError, EmptyDatasetError


def column(values) -> SequenceSample:
    return SequenceSample(np.asarray(values, dtype=float).reshape(-1, 1), label=0)


def dataset(*samples, split="train") -> SequenceDataset:
    return SequenceDataset(samples=list(samples), class_names=["a", "b"], split=split)


@pytest.mark.parametrize(
    "length, expected",
    [(5, [1, 2, 3, 0, 0]), (2, [1, 2]), (3, [1, 2, 3])],
)
def test_pad_or_trim(length, expected):
    out = pad_or_trim(column([1, 2, 3]), length)
    np.testing.assert_array_equal(out.values[:, 0], expected)
    assert out.label == 0


def test_pad_or_trim_identity_is_bitwise():
    sample = column([0.1, 0.2, 0.3])
    assert pad_or_trim(sample, 3).values is sample.values


def test_pad_or_trim_is_idempotent(rng):
    sample = SequenceSample(rng.normal(size=(7, 2)), label=1)
    for length in (1, 4, 7, 12):
        once = pad_or_trim(sample, length)
        assert once.length == length
        assert np.array_equal(pad_or_trim(once, length).values, once.values)


def test_pad_or_trim_rejects_non_positive_length():
    with pytest.raises(DomainError):
        pad_or_trim(column([1.0]), 0)


def test_pad_or_trim_dataset():
    out = pad_or_trim_dataset(dataset(column([1, 2]), column([1, 2, 3, 4])), 3)
    assert out.lengths == [3, 3]


def test_znorm_hand_statistics():
    train = dataset(column([0.0, 2.0]))
    test = dataset(column([1.0, 3.0]), split="test")
    (train_z, test_z) = znorm(train, test)

    np.testing.assert_array_equal(train_z.norm_stats.mean, [1.0])
    np.testing.assert_array_equal(train_z.norm_stats.std, [1.0])
    np.testing.assert_array_equal(train_z[0].values[:, 0], [-1.0, 1.0])
    # test split uses the train statistics
    np.testing.assert_array_equal(test_z[0].values[:, 0], [0.0, 2.0])


def test_constant_channel_becomes_zeros():
    (out,) = znorm(dataset(column([4.0, 4.0, 4.0])))
    np.testing.assert_array_equal(out[0].values, np.zeros((3, 1)))


def test_train_channels_are_standardised(rng):
    samples = [SequenceSample(rng.normal(3.0, 2.0, size=(20, 3)), label=i % 2) for i in range(10)]
    (out,) = znorm(dataset(*samples))

    rows = np.concatenate([s.values for s in out])
    np.testing.assert_allclose(rows.mean(axis=0), 0.0, atol=1e-9)
    np.testing.assert_allclose(rows.std(axis=0), 1.0, atol=1e-9)


def test_znorm_is_not_idempotent():
    train = dataset(column([0.0, 4.0]))
    stats = fit_znorm(train)
    once = apply_znorm(train, stats)
    twice = apply_znorm(once, stats)
    assert not np.array_equal(once[0].values, twice[0].values)


def test_fit_znorm_needs_samples():
    with pytest.raises(EmptyDatasetError):
        fit_znorm(dataset())
