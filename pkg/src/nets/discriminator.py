"""
Fully convolutional discriminator D.

Five conv layers with 4x4 kernels, stride 2 and padding 1, producing 64, 64,
128, 128 and 1 channels, leaky ReLU (slope 0.2) between layers. The
single-channel logit map is bilinearly upsampled back to the input size and
passed through a sigmoid, so D emits a per-pixel confidence in (0, 1) that its
input is a ground-truth one-hot map.
"""

import numpy as np
import structlog

from src.errors import ShapeError
from src.nets.params import ParameterSet, SeedLike, he_normal, make_rng
from src.tensor import Tensor, bilinear_upsample, conv2d, leaky_relu, sigmoid

logger = structlog.get_logger(__name__)

CHANNELS = (64, 64, 128, 128, 1)
KERNEL = 4
STRIDE = 2
PADDING = 1
LEAKY_SLOPE = 0.2
MIN_SIZE = 32


class DiscriminatorParams(ParameterSet):
    """Parameters of D: ``conv<k>.weight`` / ``conv<k>.bias`` for k = 1..5."""

    @classmethod
    def initialize(cls, num_classes: int, seed: SeedLike) -> "DiscriminatorParams":
        rng = make_rng(seed)
        params = cls()
        in_ch = num_classes
        for k, out_ch in enumerate(CHANNELS, start=1):
            params.add(f"conv{k}.weight", he_normal(rng, (out_ch, in_ch, KERNEL, KERNEL)))
            params.add(f"conv{k}.bias", np.zeros(out_ch))
            in_ch = out_ch
        logger.debug("Initialized discriminator", num_classes=num_classes)
        return params

    @classmethod
    def zeros(cls, num_classes: int) -> "DiscriminatorParams":
        params = cls.initialize(num_classes, seed=0)
        for _, tensor in params.items():
            tensor.data = np.zeros_like(tensor.data)
        return params

    @property
    def num_classes(self) -> int:
        return self["conv1.weight"].shape[1]


def discriminator_forward(params: DiscriminatorParams, probmap: Tensor) -> Tensor:
    """
    Per-pixel confidence map for a batch of class maps.

    Args:
        params: Discriminator parameters.
        probmap: ``[B, |C|, H, W]`` probability or one-hot map, H and W at least 32.

    Returns:
        Tensor: ``[B, 1, H, W]`` with values strictly inside (0, 1).
    """
    if probmap.ndim != 4 or probmap.shape[1] != params.num_classes:
        raise ShapeError(
            f"discriminator expects a [B, {params.num_classes}, H, W] map, got shape {probmap.shape}"
        )
    h, w = probmap.shape[2], probmap.shape[3]
    if h < MIN_SIZE or w < MIN_SIZE:
        raise ShapeError(f"discriminator input must be at least {MIN_SIZE}x{MIN_SIZE}, got {h}x{w}")

    x = probmap
    last = len(CHANNELS)
    for k in range(1, last + 1):
        x = conv2d(x, params[f"conv{k}.weight"], params[f"conv{k}.bias"], stride=STRIDE, padding=PADDING)
        if k < last:
            x = leaky_relu(x, LEAKY_SLOPE)
    x = bilinear_upsample(x, h, w)
    return sigmoid(x)
