"""Source-domain class statistics and one-hot encoding."""

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import structlog

from src.errors import DatasetError, LabelError
from src.tensor import Tensor
from src.toyscenes.spec import VOID_LABEL, Domain, Sample

logger = structlog.get_logger(__name__)


@dataclass(frozen=True)
class ClassWeights:
    """Per-class ``w_c = 1 - frequency of c`` among labeled source pixels. Read-only."""

    w: np.ndarray

    def __post_init__(self) -> None:
        frozen = np.array(self.w, dtype=np.float64)
        frozen.flags.writeable = False
        object.__setattr__(self, "w", frozen)

    @property
    def num_classes(self) -> int:
        return self.w.shape[0]

    @classmethod
    def uniform(cls, num_classes: int) -> "ClassWeights":
        return cls(np.ones(num_classes))


def class_frequencies(samples: Sequence[Sample]) -> ClassWeights:
    """
    Class weights from labeled source samples.

    Raises:
        DatasetError: On an empty list, a target or unlabeled sample, or when
            every pixel is void.
    """
    if not samples:
        raise DatasetError("class frequencies need at least one source sample")
    num_classes = samples[0].num_classes
    counts = np.zeros(num_classes, dtype=np.int64)
    for sample in samples:
        if sample.domain != Domain.SOURCE:
            raise DatasetError(
                f"class frequencies are estimated on source data only, got a {sample.domain.label} sample"
            )
        if sample.labels is None:
            raise DatasetError(f"sample with seed {sample.seed} carries no labels")
        labels = sample.labels[sample.labels != VOID_LABEL].astype(np.int64)
        if labels.size and labels.max() >= num_classes:
            raise LabelError(f"label {labels.max()} out of range for {num_classes} classes")
        counts += np.bincount(labels, minlength=num_classes)

    labeled = int(counts.sum())
    if labeled == 0:
        raise DatasetError("class frequencies need at least one labeled pixel, every pixel is void")
    weights = ClassWeights(1.0 - counts / labeled)
    logger.info("Computed class weights", pixels=labeled, weights=[round(float(v), 6) for v in weights.w])
    return weights


def one_hot(labels: np.ndarray, num_classes: int) -> Tensor:
    """
    One-hot encode a ``[H, W]`` or ``[B, H, W]`` label grid.

    Returns:
        Tensor: ``[C, H, W]`` or ``[B, C, H, W]``; void pixels (255) are all-zero.

    Raises:
        LabelError: If a label is negative or at least ``num_classes`` and not void.
    """
    labels = np.asarray(labels)
    if labels.ndim not in (2, 3):
        raise LabelError(f"label grid must be [H, W] or [B, H, W], got shape {labels.shape}")
    valid = labels != VOID_LABEL
    if np.any(valid & ((labels < 0) | (labels >= num_classes))):
        bad = labels[valid & ((labels < 0) | (labels >= num_classes))][0]
        raise LabelError(f"label {int(bad)} out of range for {num_classes} classes")
    axis = labels.ndim - 2
    classes = np.arange(num_classes).reshape((num_classes, 1, 1))
    encoded = (np.expand_dims(labels, axis) == classes) & np.expand_dims(valid, axis)
    return Tensor(encoded.astype(np.float64))
