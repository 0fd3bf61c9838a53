"""
Segmentation, adversarial and self-teaching losses.

Every loss sums over pixels and classes and divides by the batch size only.
Logs are clamped at ``LOG_FLOOR``. Inputs are validated before any node is
recorded, so a rejected call leaves no partial graph behind.
"""

from typing import Mapping, Optional

import numpy as np

from src.errors import LossInputError, ShapeError
from src.losses.weights import LossWeights, effective_self_teach_weight
from src.tensor import Tensor, add, affine, dot_const, log_clamped, scale
from src.toyscenes.stats import ClassWeights

LOG_FLOOR = 1e-12

PART_NAMES = ("l_g1", "l_g2_s", "l_g2_t", "l_g3")


def _require_probmap(t: Tensor, what: str) -> None:
    if t.ndim != 4:
        raise ShapeError(f"{what} must be [B, C, H, W], got shape {t.shape}")


def _require_confidence(t: Tensor, what: str) -> None:
    if t.ndim != 4 or t.shape[1] != 1:
        raise ShapeError(f"{what} must be [B, 1, H, W], got shape {t.shape}")
    values = t.data
    if not np.all(np.isfinite(values)) or values.min(initial=0.0) < 0.0 or values.max(initial=0.0) > 1.0:
        raise LossInputError(f"{what} must hold probabilities in [0, 1]")


def loss_supervised_ce(probmap: Tensor, onehot: Tensor) -> Tensor:
    """
    Cross-entropy of a probability map against one-hot labels.

    Void pixels are all-zero in ``onehot`` and contribute nothing.

    Args:
        probmap: ``[B, C, H, W]`` per-pixel class distributions.
        onehot: ``[B, C, H, W]`` constant targets.

    Returns:
        Tensor: ``-sum(Y * log P) / B``.
    """
    _require_probmap(probmap, "probmap")
    if onehot.shape != probmap.shape:
        raise ShapeError(f"one-hot shape {onehot.shape} does not match probmap shape {probmap.shape}")
    batch = probmap.shape[0]
    return scale(dot_const(log_clamped(probmap, LOG_FLOOR), onehot.data), -1.0 / batch)


def loss_discriminator(
    d_on_fake: Tensor,
    d_on_real: Tensor,
    real_valid: Optional[np.ndarray] = None,
) -> Tensor:
    """
    Binary cross-entropy of the discriminator: fakes towards 0, ground truth towards 1.

    The two branches may hold different batch sizes (the fake branch is the
    mixed source and target batch); each is normalized by its own. Pass the
    generator output detached so no gradient reaches it.

    Args:
        d_on_fake: ``[Bf, 1, H, W]`` confidences on generator outputs.
        d_on_real: ``[Br, 1, H, W]`` confidences on one-hot ground truth.
        real_valid: Optional ``[Br, 1, H, W]`` 0/1 array; pixels with 0
            (void labels) are left out of the real branch.
    """
    _require_confidence(d_on_fake, "d_on_fake")
    _require_confidence(d_on_real, "d_on_real")
    if d_on_fake.shape[2:] != d_on_real.shape[2:]:
        raise ShapeError(f"confidence maps differ spatially: {d_on_fake.shape} vs {d_on_real.shape}")
    valid = np.ones(d_on_real.shape) if real_valid is None else np.asarray(real_valid, dtype=np.float64)
    if valid.shape != d_on_real.shape:
        raise ShapeError(f"real_valid shape {valid.shape} does not match d_on_real shape {d_on_real.shape}")

    fake_term = scale(
        dot_const(log_clamped(affine(d_on_fake, -1.0, 1.0), LOG_FLOOR), np.ones(d_on_fake.shape)),
        -1.0 / d_on_fake.shape[0],
    )
    real_term = scale(dot_const(log_clamped(d_on_real, LOG_FLOOR), valid), -1.0 / d_on_real.shape[0])
    return add(fake_term, real_term)


def loss_adversarial(d_on_fake: Tensor) -> Tensor:
    """``-sum(log D(G(x))) / B``; freeze the discriminator before calling."""
    _require_confidence(d_on_fake, "d_on_fake")
    return scale(
        dot_const(log_clamped(d_on_fake, LOG_FLOOR), np.ones(d_on_fake.shape)),
        -1.0 / d_on_fake.shape[0],
    )


def self_teach_coefficients(
    probmap: np.ndarray,
    weights: np.ndarray,
    class_weights: Optional[ClassWeights] = None,
) -> np.ndarray:
    """Constant ``D_R * W_c * one_hot(argmax P)`` array, shaped like ``probmap``."""
    num_classes = probmap.shape[1]
    pseudo = np.argmax(probmap, axis=1)
    onehot = (pseudo[:, None, :, :] == np.arange(num_classes)[None, :, None, None]).astype(np.float64)
    w_c = np.ones(num_classes) if class_weights is None else class_weights.w
    return onehot * w_c[None, :, None, None] * weights


def loss_self_teach(
    probmap: Tensor,
    weights: Tensor,
    class_weights: Optional[ClassWeights] = None,
) -> Tensor:
    """
    Reliability- and class-weighted cross-entropy against the argmax pseudo-labels.

    Pseudo-labels, reliability weights and class weights are constants; only
    ``probmap`` receives a gradient. ``class_weights=None`` means all ones.

    Args:
        probmap: ``[B, C, H, W]`` target-domain prediction.
        weights: ``[B, 1, H, W]`` reliability weights.
        class_weights: Per-class weights from the source domain.
    """
    _require_probmap(probmap, "probmap")
    b, c, h, w = probmap.shape
    if weights.shape != (b, 1, h, w):
        raise ShapeError(f"weight map shape {weights.shape} does not match probmap shape {probmap.shape}")
    if class_weights is not None and class_weights.num_classes != c:
        raise ShapeError(f"{class_weights.num_classes} class weights for a {c}-class probmap")
    coeff = self_teach_coefficients(probmap.data, weights.data, class_weights)
    return scale(dot_const(log_clamped(probmap, LOG_FLOOR), coeff), -1.0 / b)


def loss_full(
    parts: Mapping[str, Tensor],
    weights: LossWeights,
    step: int,
    warmup_steps: int,
) -> Tensor:
    """
    ``l_g1 + w_s * l_g2_s + w_t * l_g2_t + w' * l_g3`` with ``w' = 0`` during warm-up.

    Terms that are missing or carry a zero coefficient are left out of the
    graph entirely, so a warm-up step differentiates exactly the graph of a
    run without self-teaching.
    """
    unknown = set(parts) - set(PART_NAMES)
    if unknown:
        raise KeyError(f"unknown loss parts: {sorted(unknown)}")
    if "l_g1" not in parts:
        raise KeyError("loss_full needs the supervised part 'l_g1'")
    for name, part in parts.items():
        if part.shape != ():
            raise ShapeError(f"loss part {name} must be a scalar, got shape {part.shape}")

    coefficients = {
        "l_g2_s": weights.w_s,
        "l_g2_t": weights.w_t,
        "l_g3": effective_self_teach_weight(weights.w_prime, step, warmup_steps),
    }
    result = parts["l_g1"]
    for name, coefficient in coefficients.items():
        if name in parts and coefficient != 0.0:
            result = add(result, scale(parts[name], coefficient))
    return result
