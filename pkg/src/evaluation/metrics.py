"""Confusion matrices, per-class IoU and checkpoint evaluation."""

from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field

from src.errors import DatasetError, LabelError, ShapeError
from src.nets.generator import generator_forward
from src.tensor import Tensor
from src.toyscenes.spec import VOID_LABEL
from src.toyscenes.storage import load_dataset
from src.trainer.checkpoint import load_generator

logger = structlog.get_logger(__name__)

EVAL_BATCH = 8

PathLike = Union[str, Path]


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Rows are ground truth, columns prediction; void pixels never counted."""

    counts: np.ndarray

    @classmethod
    def empty(cls, num_classes: int) -> "ConfusionMatrix":
        return cls(np.zeros((num_classes, num_classes), dtype=np.int64))

    @property
    def num_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def confusion_accumulate(pred: np.ndarray, gt: np.ndarray, cm: ConfusionMatrix) -> ConfusionMatrix:
    """
    Add the non-void pixels of one prediction to ``cm``.

    Returns a new matrix; ``cm`` is left untouched.

    Raises:
        ShapeError: If ``pred`` and ``gt`` differ in shape.
        LabelError: If a ground-truth label or prediction is out of range.
    """
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise ShapeError(f"prediction shape {pred.shape} does not match ground truth shape {gt.shape}")
    n = cm.num_classes
    valid = gt != VOID_LABEL
    g = gt[valid].astype(np.int64)
    p = pred[valid].astype(np.int64)
    if g.size and (g.min() < 0 or g.max() >= n):
        raise LabelError(f"ground-truth label outside [0, {n}) and not void")
    if p.size and (p.min() < 0 or p.max() >= n):
        raise LabelError(f"predicted label outside [0, {n})")
    counts = np.bincount(n * g + p, minlength=n * n).reshape(n, n)
    return ConfusionMatrix(cm.counts + counts)


def miou(cm: ConfusionMatrix) -> Tuple[List[Optional[float]], Optional[float]]:
    """
    Per-class IoU and their mean.

    A class that never occurs in the ground truth nor the prediction has no
    IoU (None) and is left out of the mean; the mean is None when no class
    has one.
    """
    counts = cm.counts.astype(np.int64)
    intersection = np.diag(counts)
    union = counts.sum(axis=1) + counts.sum(axis=0) - intersection
    per_class: List[Optional[float]] = [
        float(i) / float(u) if u > 0 else None for i, u in zip(intersection, union)
    ]
    present = [v for v in per_class if v is not None]
    mean = float(np.mean(present)) if present else None
    return per_class, mean


class ClassIoU(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    class_name: str = Field(alias="class")
    iou: Optional[float]


class MetricsRecord(BaseModel):
    """The ``metrics.json`` document."""

    checkpoint: str
    dataset: str
    per_class: List[ClassIoU]
    miou: Optional[float]
    pixels_evaluated: int

    @classmethod
    def from_confusion(
        cls,
        cm: ConfusionMatrix,
        class_names: Tuple[str, ...],
        checkpoint: str,
        dataset: str,
    ) -> "MetricsRecord":
        per_class, mean = miou(cm)
        return cls(
            checkpoint=checkpoint,
            dataset=dataset,
            per_class=[ClassIoU(class_name=name, iou=v) for name, v in zip(class_names, per_class)],
            miou=mean,
            pixels_evaluated=cm.total,
        )

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True, indent=2) + "\n"


def evaluate_checkpoint(checkpoint: PathLike, dataset_dir: PathLike) -> MetricsRecord:
    """
    Run the checkpoint's generator over every labeled sample of a dataset.

    Raises:
        CheckpointError: If the checkpoint is missing or predicts a different
            number of classes than the dataset holds.
        DatasetError: If the dataset is empty.
    """
    dataset = load_dataset(dataset_dir, with_labels=True)
    if not len(dataset):
        raise DatasetError(f"{dataset_dir}: nothing to evaluate")
    generator, step = load_generator(checkpoint, num_classes=dataset.spec.num_classes)
    generator.freeze()

    cm = ConfusionMatrix.empty(dataset.spec.num_classes)
    samples = dataset.samples
    for start in range(0, len(samples), EVAL_BATCH):
        batch = samples[start:start + EVAL_BATCH]
        images = Tensor(np.stack([s.image for s in batch]).astype(np.float64))
        pred = np.argmax(generator_forward(generator, images).data, axis=1)
        for sample, p in zip(batch, pred):
            cm = confusion_accumulate(p, sample.labels, cm)

    record = MetricsRecord.from_confusion(
        cm,
        dataset.spec.class_names,
        checkpoint=str(checkpoint),
        dataset=str(dataset_dir),
    )
    logger.info(
        "Checkpoint evaluated",
        checkpoint=str(checkpoint),
        step=step,
        dataset=str(dataset_dir),
        miou=record.miou,
        pixels=record.pixels_evaluated,
    )
    return record
