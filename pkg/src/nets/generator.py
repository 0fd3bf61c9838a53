"""
Toy encoder-decoder segmentation network G.

Encoder: three blocks of conv 3x3 / stride 2 / pad 1 followed by leaky ReLU
(slope 0.1) with 16, 32 and 64 channels. Decoder: bilinear upsample by 8 back
to the input size, conv 3x3 / pad 1 to 32 channels, leaky ReLU, conv 1x1 to
the class count and a channel softmax.
"""

import numpy as np
import structlog

from src.errors import ShapeError
from src.nets.params import ParameterSet, SeedLike, he_normal, make_rng
from src.tensor import Tensor, bilinear_upsample, conv2d, leaky_relu, softmax_channels

logger = structlog.get_logger(__name__)

IMAGE_CHANNELS = 3
ENCODER_CHANNELS = (16, 32, 64)
DECODER_CHANNELS = 32
LEAKY_SLOPE = 0.1
DOWNSAMPLE = 2 ** len(ENCODER_CHANNELS)
MIN_SIZE = 16


class GeneratorParams(ParameterSet):
    """Parameters of G: ``encoder.<i>.*``, ``decoder.conv.*``, ``decoder.head.*``."""

    @classmethod
    def initialize(cls, num_classes: int, seed: SeedLike) -> "GeneratorParams":
        if num_classes < 2:
            raise ShapeError(f"generator needs at least 2 classes, got {num_classes}")
        rng = make_rng(seed)
        params = cls()
        in_ch = IMAGE_CHANNELS
        for i, out_ch in enumerate(ENCODER_CHANNELS):
            params.add(f"encoder.{i}.weight", he_normal(rng, (out_ch, in_ch, 3, 3)))
            params.add(f"encoder.{i}.bias", np.zeros(out_ch))
            in_ch = out_ch
        params.add("decoder.conv.weight", he_normal(rng, (DECODER_CHANNELS, in_ch, 3, 3)))
        params.add("decoder.conv.bias", np.zeros(DECODER_CHANNELS))
        params.add("decoder.head.weight", he_normal(rng, (num_classes, DECODER_CHANNELS, 1, 1)))
        params.add("decoder.head.bias", np.zeros(num_classes))
        logger.debug("Initialized generator", num_classes=num_classes, tensors=len(params))
        return params

    @property
    def num_classes(self) -> int:
        return self["decoder.head.weight"].shape[0]


def generator_forward(params: GeneratorParams, image: Tensor) -> Tensor:
    """
    Per-pixel class distribution for a batch of images.

    Args:
        params: Generator parameters.
        image: ``[B, 3, H, W]`` with H, W multiples of 8 and at least 16.

    Returns:
        Tensor: ``[B, |C|, H, W]`` probabilities summing to 1 over channels.
    """
    if image.ndim != 4 or image.shape[1] != IMAGE_CHANNELS:
        raise ShapeError(f"generator expects a [B, 3, H, W] image, got shape {image.shape}")
    h, w = image.shape[2], image.shape[3]
    if h % DOWNSAMPLE or w % DOWNSAMPLE or h < MIN_SIZE or w < MIN_SIZE:
        raise ShapeError(
            f"generator needs H and W to be multiples of {DOWNSAMPLE} and at least {MIN_SIZE}, "
            f"got {h}x{w}"
        )

    x = image
    for i in range(len(ENCODER_CHANNELS)):
        x = conv2d(x, params[f"encoder.{i}.weight"], params[f"encoder.{i}.bias"], stride=2, padding=1)
        x = leaky_relu(x, LEAKY_SLOPE)
    x = bilinear_upsample(x, h, w)
    x = conv2d(x, params["decoder.conv.weight"], params["decoder.conv.bias"], stride=1, padding=1)
    x = leaky_relu(x, LEAKY_SLOPE)
    x = conv2d(x, params["decoder.head.weight"], params["decoder.head.bias"], stride=1, padding=0)
    return softmax_channels(x)
