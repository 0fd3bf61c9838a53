"""Losses of the adaptation objective."""

from src.losses.functional import (
    LOG_FLOOR,
    PART_NAMES,
    loss_adversarial,
    loss_discriminator,
    loss_full,
    loss_self_teach,
    loss_supervised_ce,
    self_teach_coefficients,
)
from src.losses.weights import WEIGHT_NAMES, LossWeights, effective_self_teach_weight

__all__ = [
    "LOG_FLOOR",
    "PART_NAMES",
    "WEIGHT_NAMES",
    "LossWeights",
    "effective_self_teach_weight",
    "loss_adversarial",
    "loss_discriminator",
    "loss_full",
    "loss_self_teach",
    "loss_supervised_ce",
    "self_teach_coefficients",
]
