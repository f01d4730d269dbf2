import numpy as np
import pytest

from seqmine.datasets import SequenceDataset, SequenceSample, format_ts, parse_ts, write_ts
from seqmine.datasets.ts_format import impute_linear
from seqmine.errors import TsFormatError


def assert_same_samples(a: SequenceDataset, b: SequenceDataset) -> None:
    assert len(a) == len(b)
    assert a.class_names == b.class_names
    for x, y in zip(a, b):
        assert x.label == y.label
        assert np.array_equal(x.values, y.values)


def test_parse_valid_multivariate(fixtures_dir):
    dataset = parse_ts(fixtures_dir / "valid_multivariate.ts")

    assert dataset.name == "TinyGesture"
    assert dataset.class_names == ["a", "b"]
    assert dataset.channels == 2
    assert len(dataset) == 4
    assert dataset.labels.tolist() == [0, 1, 0, 1]

    first = dataset[0]
    assert first.values.shape == (3, 2)
    np.testing.assert_array_equal(first.values, [[1, 4], [2, 5], [3, 6]])
    np.testing.assert_array_equal(dataset[2].values[:, 1], [1e-3, 250.0, 7.0])


def test_two_line_fixture(tmp_path):
    path = tmp_path / "Pair_TEST.ts"
    path.write_text("@dimensions 2\n@classLabel true a b\n@data\n1,2,3:4,5,6:a\n")

    dataset = parse_ts(path)
    assert len(dataset) == 1
    assert dataset[0].values.shape == (3, 2)
    assert dataset[0].label == 0
    assert dataset.split == "test"


def test_missing_values_are_interpolated(fixtures_dir):
    dataset = parse_ts(fixtures_dir / "missing_values.ts")

    np.testing.assert_array_equal(dataset[0].values[:, 0], [1.0, 2.0, 3.0])
    # leading gap holds the first known value
    np.testing.assert_array_equal(dataset[0].values[:, 1], [5.0, 5.0, 6.0])
    # a channel missing everywhere becomes zeros
    np.testing.assert_array_equal(dataset[1].values[:, 0], [0.0, 0.0, 0.0])
    np.testing.assert_array_equal(dataset[1].values[:, 1], [1.0, 2.0, 2.0])


def test_impute_linear():
    np.testing.assert_array_equal(impute_linear(np.array([np.nan, 2.0, np.nan, 6.0, np.nan])), [2, 2, 4, 6, 6])


@pytest.mark.parametrize(
    "fixture, line, reason",
    [
        ("bad_dimensions.ts", 6, "expected 2 dimensions, found 3"),
        ("unknown_label.ts", 6, "unknown class label 'c'"),
        ("unknown_directive.ts", 2, "unknown directive @targetLabel"),
        ("empty_body.ts", 4, "empty body"),
    ],
)
def test_malformed_fixtures(fixtures_dir, fixture, line, reason):
    with pytest.raises(TsFormatError) as info:
        parse_ts(fixtures_dir / fixture)

    assert info.value.line == line
    assert info.value.reason == reason
    assert f":{line}:" in str(info.value)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        parse_ts(tmp_path / "absent.ts")


def test_timestamps_are_rejected(tmp_path):
    path = tmp_path / "stamped.ts"
    path.write_text("@timeStamps true\n@classLabel true a b\n@data\n")
    with pytest.raises(TsFormatError, match="timestamped"):
        parse_ts(path)


def test_unequal_lengths_under_equal_length_flag(tmp_path):
    path = tmp_path / "ragged.ts"
    path.write_text("@equalLength true\n@classLabel true a b\n@data\n1,2,3:a\n1,2:b\n")
    with pytest.raises(TsFormatError) as info:
        parse_ts(path)
    assert info.value.line == 5


def test_variable_lengths_are_kept(tmp_path):
    path = tmp_path / "ragged.ts"
    path.write_text("@equalLength false\n@classLabel true a b\n@data\n1,2,3:a\n1,2:b\n")
    assert parse_ts(path).lengths == [3, 2]


@pytest.mark.parametrize("fixture", ["valid_multivariate.ts", "missing_values.ts", "hand gestures_TRAIN.ts"])
def test_round_trip(tmp_path, fixtures_dir, fixture):
    original = parse_ts(fixtures_dir / fixture)
    path = write_ts(original, tmp_path / "copy_TRAIN.ts")
    again = parse_ts(path)

    assert_same_samples(original, again)
    assert again.name == original.name
    assert format_ts(again) == format_ts(original)


def test_round_trip_keeps_awkward_floats(tmp_path):
    values = np.array([[0.1, 1e-300], [1 / 3, -2.5e17]])
    dataset = SequenceDataset(samples=[SequenceSample(values, 0)], class_names=["only", "other"])
    again = parse_ts(write_ts(dataset, tmp_path / "floats.ts"))
    assert np.array_equal(again[0].values, values)


def test_problem_name_with_spaces(fixtures_dir):
    dataset = parse_ts(fixtures_dir / "hand gestures_TRAIN.ts")
    assert dataset.name == "hand gestures_TRAIN"
    assert dataset.class_names == ["up", "down"]
    assert "@problemName hand gestures_TRAIN" in format_ts(dataset).splitlines()
