import numpy as np
import pytest

from segadapt.losses import IGNORE_LABEL
from segadapt.metrics import confusion_matrix, evaluate_miou, iou_from_confusion


class _ConstantModel:
    def __init__(self, labels):
        self._labels = labels

    def predict_labels(self, image):
        return self._labels


def test_perfect_prediction_gives_unit_iou():
    truth = np.random.default_rng(0).integers(0, 4, size=(8, 8))
    iou, miou = iou_from_confusion(confusion_matrix(truth, truth, 4))
    assert np.allclose(iou[~np.isnan(iou)], 1.0)
    assert miou == pytest.approx(1.0)


def test_disjoint_prediction_gives_zero_iou():
    truth = np.zeros((4, 4), dtype=int)
    pred = np.ones((4, 4), dtype=int)
    iou, _ = iou_from_confusion(confusion_matrix(pred, truth, 3))
    assert iou[0] == 0.0 and iou[1] == 0.0
    assert np.isnan(iou[2])  # never predicted, never true: excluded


def test_ignore_pixels_are_skipped():
    truth = np.array([[0, IGNORE_LABEL], [1, 1]])
    pred = np.array([[0, 1], [1, 0]])
    confusion = confusion_matrix(pred, truth, 2)
    assert confusion.sum() == 3


def test_random_instance_matches_brute_force():
    rng = np.random.default_rng(1)
    truth = rng.integers(0, 5, size=(8, 8))
    pred = rng.integers(0, 5, size=(8, 8))
    iou, miou = iou_from_confusion(confusion_matrix(pred, truth, 5))
    for c in range(5):
        tp = int(np.sum((pred == c) & (truth == c)))
        fp = int(np.sum((pred == c) & (truth != c)))
        fn = int(np.sum((pred != c) & (truth == c)))
        if tp + fp + fn == 0:
            assert np.isnan(iou[c])
        else:
            assert iou[c] == pytest.approx(tp / (tp + fp + fn))
    manual = [v for v in iou if not np.isnan(v)]
    assert miou == pytest.approx(float(np.mean(manual)))


def test_evaluate_miou_accumulates_over_scenes():
    labels = np.zeros((4, 4), dtype=int)
    labels[:2] = 1
    model = _ConstantModel(labels)
    dataset = [(None, labels), (None, 1 - labels)]
    iou, miou = evaluate_miou(model, dataset, 2)
    # half of each class is predicted correctly across the two scenes:
    # per class TP=16, FP=16, FN=16 -> IoU = 1/3
    assert np.allclose(iou, 1.0 / 3.0)
    assert miou == pytest.approx(1.0 / 3.0)
