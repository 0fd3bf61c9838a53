"""Segmentation metrics and report emission."""

from src.evaluation.metrics import (
    ClassIoU,
    ConfusionMatrix,
    MetricsRecord,
    confusion_accumulate,
    evaluate_checkpoint,
    miou,
)
from src.evaluation.report import emit_report

__all__ = [
    "ClassIoU",
    "ConfusionMatrix",
    "MetricsRecord",
    "confusion_accumulate",
    "emit_report",
    "evaluate_checkpoint",
    "miou",
]
