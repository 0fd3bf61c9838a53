"""Confusion matrices, mIoU, checkpoint evaluation and report files."""

import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from src.errors import CheckpointError, LabelError, ShapeError
from src.evaluation.metrics import ConfusionMatrix, MetricsRecord, confusion_accumulate, evaluate_checkpoint, miou
from src.evaluation.report import LOSS_PLOT, MASK_PLOT, METRICS_FILE, PER_CLASS_FILE, emit_report
from src.evaluation.service import EvaluationService
from src.nets import GeneratorParams
from src.toyscenes.spec import VOID_LABEL
from src.trainer import StepRecord, TrainLog, save_checkpoint
from src.trainer.log import JSONL_FILE


def random_pair(rng, n, shape=(6, 7), void_fraction=0.2):
    gt = rng.integers(0, n, shape)
    gt[rng.uniform(size=shape) < void_fraction] = VOID_LABEL
    return rng.integers(0, n, shape), gt


def test_perfect_prediction_gives_diagonal():
    gt = np.array([[0, 1], [2, 2]])
    cm = confusion_accumulate(gt, gt, ConfusionMatrix.empty(3))
    assert cm.counts.tolist() == [[1, 0, 0], [0, 1, 0], [0, 0, 2]]


def test_void_pixels_are_not_counted():
    gt = np.full((3, 3), VOID_LABEL)
    cm = ConfusionMatrix.empty(2)
    assert confusion_accumulate(np.zeros((3, 3), dtype=int), gt, cm).total == 0


def test_confusion_matches_counting_oracle(rng):
    for _ in range(20):
        n = int(rng.integers(2, 6))
        pred, gt = random_pair(rng, n)
        oracle = np.zeros((n, n), dtype=np.int64)
        for p, g in zip(pred.ravel(), gt.ravel()):
            if g != VOID_LABEL:
                oracle[g, p] += 1
        cm = confusion_accumulate(pred, gt, ConfusionMatrix.empty(n))
        assert np.array_equal(cm.counts, oracle)
        assert cm.total == int((gt != VOID_LABEL).sum())


def test_accumulation_is_order_independent(rng):
    pairs = [random_pair(rng, 4) for _ in range(6)]
    forward = ConfusionMatrix.empty(4)
    for pred, gt in pairs:
        forward = confusion_accumulate(pred, gt, forward)
    backward = ConfusionMatrix.empty(4)
    for pred, gt in reversed(pairs):
        backward = confusion_accumulate(pred, gt, backward)
    assert np.array_equal(forward.counts, backward.counts)


def test_confusion_rejects_bad_input():
    with pytest.raises(ShapeError):
        confusion_accumulate(np.zeros((2, 2), dtype=int), np.zeros((2, 3), dtype=int), ConfusionMatrix.empty(2))
    with pytest.raises(LabelError):
        confusion_accumulate(np.zeros((1, 1), dtype=int), np.full((1, 1), 3), ConfusionMatrix.empty(2))
    with pytest.raises(LabelError):
        confusion_accumulate(np.full((1, 1), 2), np.zeros((1, 1), dtype=int), ConfusionMatrix.empty(2))


def test_miou_examples():
    per_class, mean = miou(ConfusionMatrix(np.diag([4, 2, 7])))
    assert per_class == [1.0, 1.0, 1.0] and mean == 1.0
    per_class, mean = miou(ConfusionMatrix(np.array([[3, 1], [1, 3]])))
    assert per_class == [pytest.approx(0.6), pytest.approx(0.6)]
    assert mean == pytest.approx(0.6)


def test_absent_class_is_left_out_of_the_mean():
    per_class, mean = miou(ConfusionMatrix(np.array([[2, 0, 0], [2, 0, 0], [0, 0, 0]])))
    assert per_class == [0.5, 0.0, None]
    assert mean == pytest.approx(0.25)
    assert miou(ConfusionMatrix.empty(3)) == ([None, None, None], None)


def test_miou_matches_set_oracle(rng):
    for _ in range(100):
        n = int(rng.integers(2, 6))
        pred, gt = random_pair(rng, n, shape=(9, 9))
        cm = confusion_accumulate(pred, gt, ConfusionMatrix.empty(n))
        per_class, _ = miou(cm)
        valid = {i for i, g in enumerate(gt.ravel()) if g != VOID_LABEL}
        for c in range(n):
            in_gt = {i for i in valid if gt.ravel()[i] == c}
            in_pred = {i for i in valid if pred.ravel()[i] == c}
            union = in_gt | in_pred
            expected = len(in_gt & in_pred) / len(union) if union else None
            assert per_class[c] == (pytest.approx(expected) if expected is not None else None)


def test_miou_is_permutation_equivariant(rng):
    counts = rng.integers(0, 20, (5, 5))
    perm = rng.permutation(5)
    per_class, mean = miou(ConfusionMatrix(counts))
    permuted, permuted_mean = miou(ConfusionMatrix(counts[np.ix_(perm, perm)]))
    assert permuted == pytest.approx([per_class[p] for p in perm])
    assert permuted_mean == pytest.approx(mean)


@pytest.fixture
def untrained_checkpoint(tmp_path):
    return save_checkpoint(tmp_path / "g.udac", GeneratorParams.initialize(5, seed=9), None, step=0)


def test_evaluate_checkpoint_is_repeatable(tiny_data, untrained_checkpoint):
    first = evaluate_checkpoint(untrained_checkpoint, tiny_data / "target_val")
    second = evaluate_checkpoint(untrained_checkpoint, tiny_data / "target_val")
    assert first.to_json() == second.to_json()
    assert first.pixels_evaluated > 0
    assert [c.class_name for c in first.per_class] == ["ground", "sky", "block", "object", "pole"]
    assert first.miou < 0.3


def test_evaluate_checkpoint_rejects_class_mismatch(tmp_path, tiny_data):
    path = save_checkpoint(tmp_path / "g3.udac", GeneratorParams.initialize(3, seed=1), None, step=0)
    with pytest.raises(CheckpointError):
        evaluate_checkpoint(path, tiny_data / "target_val")
    with pytest.raises(CheckpointError):
        evaluate_checkpoint(tmp_path / "missing.udac", tiny_data / "target_val")


def sample_log():
    return TrainLog(
        [
            StepRecord(step=i, lr=1e-4, l_g1=2.0 / (i + 1), l_g2_s=0.7, l_g2_t=0.6, l_d=1.3, mask_fraction=0.1 * i)
            for i in range(5)
        ]
    )


def sample_metrics():
    return MetricsRecord.from_confusion(
        ConfusionMatrix(np.array([[3, 1], [1, 3]])), ("ground", "sky"), checkpoint="c.udac", dataset="d"
    )


def test_report_is_byte_identical_across_runs(tmp_path):
    a = emit_report(sample_log(), sample_metrics(), tmp_path / "a")
    b = emit_report(sample_log(), sample_metrics(), tmp_path / "b")
    assert [p.name for p in a] == [METRICS_FILE, PER_CLASS_FILE, LOSS_PLOT, MASK_PLOT]
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes()


def test_report_files_are_well_formed(tmp_path):
    emit_report(sample_log(), sample_metrics(), tmp_path)
    for name in (LOSS_PLOT, MASK_PLOT):
        root = ET.parse(tmp_path / name).getroot()
        assert root.tag.endswith("svg")
    doc = json.loads((tmp_path / METRICS_FILE).read_text())
    assert doc["per_class"][0] == {"class": "ground", "iou": 0.6}
    assert doc["miou"] == pytest.approx(0.6)
    assert (tmp_path / PER_CLASS_FILE).read_text().splitlines() == ["class,iou", "ground,0.6", "sky,0.6"]


def test_report_from_empty_log(tmp_path):
    written = emit_report(TrainLog(), None, tmp_path)
    assert not (tmp_path / METRICS_FILE).exists()
    assert (tmp_path / PER_CLASS_FILE).read_text() == "class,iou\n"
    for path in written[1:]:
        ET.parse(path)


def test_eval_and_report_commands(tmp_path, tiny_data, untrained_checkpoint):
    TrainLog([StepRecord(step=0, lr=1e-4, l_g1=1.0)]).write_jsonl(untrained_checkpoint.parent / JSONL_FILE)
    service = EvaluationService()
    summary = service.evaluate(
        {"checkpoint": str(untrained_checkpoint), "dataset": str(tiny_data / "target_val"), "out": str(tmp_path / "eval")}
    )
    assert summary.startswith("mIoU ")
    metrics = tmp_path / "eval" / METRICS_FILE
    assert MetricsRecord.model_validate_json(metrics.read_text()).pixels_evaluated > 0

    service.report(
        {"log": str(untrained_checkpoint.parent / JSONL_FILE), "metrics": str(metrics), "out": str(tmp_path / "again")}
    )
    for name in (METRICS_FILE, PER_CLASS_FILE, LOSS_PLOT, MASK_PLOT):
        assert (tmp_path / "again" / name).read_bytes() == (tmp_path / "eval" / name).read_bytes()
