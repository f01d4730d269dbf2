import numpy as np
import pytest

from seqmine.errors import BoundsError, EmptyDatasetError, ShapeError
from seqmine.metrics import (
    ConfusionMatrix,
    confusion,
    evaluate_predictions,
    format_table_csv,
    report,
    write_report_json,
)


def test_hand_computed_report():
    r = report(ConfusionMatrix(np.array([[2, 0], [1, 1]])))

    assert r.accuracy == pytest.approx(0.75)
    assert r.precision == pytest.approx(5 / 6)
    assert r.recall == pytest.approx(0.75)
    assert r.num_samples == 4
    assert r.support == [2, 2]


def test_confusion_counts():
    cm = confusion([0, 1, 1, 1], [0, 0, 1, 1], num_classes=2)
    assert cm.counts.tolist() == [[1, 1], [0, 2]]
    assert cm.total == 4


def test_perfect_predictions():
    r = evaluate_predictions([0, 1, 2, 2], [0, 1, 2, 2], num_classes=3)
    assert (r.accuracy, r.precision, r.recall) == (1.0, 1.0, 1.0)


def test_never_predicted_class_counts_as_zero_precision():
    r = evaluate_predictions([0, 0, 0], [0, 1, 1], num_classes=2)

    assert r.per_class_precision == [pytest.approx(1 / 3), 0.0]
    assert r.zero_division_classes == [1]
    assert r.precision == pytest.approx(1 / 6)


def test_absent_class_is_left_out():
    # class 2 never occurs in labels or predictions
    r = evaluate_predictions([0, 1], [0, 1], num_classes=3)
    assert r.precision == 1.0 and r.recall == 1.0
    assert r.per_class_recall[2] is None


@pytest.mark.parametrize("average", ["macro", "micro", "weighted"])
def test_aggregates_stay_in_unit_interval(rng, average):
    preds = rng.integers(0, 4, size=60)
    labels = rng.integers(0, 4, size=60)
    r = evaluate_predictions(preds, labels, num_classes=4, average=average)

    for value in (r.accuracy, r.precision, r.recall):
        assert 0.0 <= value <= 1.0
    assert r.accuracy == pytest.approx(np.trace(np.array(r.confusion)) / 60)


def test_micro_recall_is_accuracy(rng):
    preds = rng.integers(0, 3, size=40)
    labels = rng.integers(0, 3, size=40)
    r = evaluate_predictions(preds, labels, num_classes=3, average="micro")
    assert r.recall == r.accuracy == r.precision


def test_weighted_average():
    r = report(ConfusionMatrix(np.array([[3, 1], [0, 0]])), average="weighted")
    # only class 0 has support
    assert r.recall == pytest.approx(0.75)
    assert r.precision == pytest.approx(1.0)


def test_class_permutation_leaves_aggregates(rng):
    preds = rng.integers(0, 4, size=80)
    labels = rng.integers(0, 4, size=80)
    perm = np.array([2, 0, 3, 1])

    a = evaluate_predictions(preds, labels, 4)
    b = evaluate_predictions(perm[preds], perm[labels], 4)

    for field in ("accuracy", "precision", "recall"):
        assert getattr(b, field) == pytest.approx(getattr(a, field), abs=1e-12)
    np.testing.assert_allclose(np.array(b.per_class_precision)[perm], a.per_class_precision, atol=1e-12)


def test_uniform_guessing_is_near_chance():
    rng = np.random.default_rng(0)
    labels = np.repeat([0, 1], 500)
    preds = rng.integers(0, 2, size=1000)
    assert abs(evaluate_predictions(preds, labels, 2).accuracy - 0.5) <= 0.1


def test_empty_input():
    cm = confusion([], [], num_classes=2)
    assert cm.total == 0
    with pytest.raises(EmptyDatasetError):
        report(cm)


def test_invalid_inputs():
    with pytest.raises(ShapeError):
        confusion([0, 1], [0], num_classes=2)
    with pytest.raises(BoundsError):
        confusion([0, 2], [0, 1], num_classes=2)


def test_table_csv_uses_percentages():
    r = report(ConfusionMatrix(np.array([[2, 0], [1, 1]])))
    text = format_table_csv([("BiLSTM + Multi-Scale Attention", r)])

    assert text.splitlines() == [
        "model,Acc,Precision,Recall",
        "BiLSTM + Multi-Scale Attention,75.00,83.33,75.00",
    ]


def test_report_json(tmp_path):
    r = evaluate_predictions([0, 1], [0, 1], 2)
    path = write_report_json(r, tmp_path / "report.json")
    assert '"accuracy": 1.0' in path.read_text()
