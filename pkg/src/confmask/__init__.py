"""Reliability masks for self-teaching: seed threshold, region growing, weights."""

from src.confmask.config import DEFAULT_T_R, DEFAULT_T_U, MaskConfig
from src.confmask.mask import (
    Reliability,
    build_reliability,
    grow_mask,
    grow_masks,
    pseudo_labels,
    reliability_weights,
    threshold_mask,
)

__all__ = [
    "DEFAULT_T_R",
    "DEFAULT_T_U",
    "MaskConfig",
    "Reliability",
    "build_reliability",
    "grow_mask",
    "grow_masks",
    "pseudo_labels",
    "reliability_weights",
    "threshold_mask",
]
