"""Reverse-mode autodiff core on float64 numpy arrays."""

from src.tensor.tensor import Function, Graph, Tensor, backward
from src.tensor.functional import (
    add,
    affine,
    bilinear_upsample,
    conv2d,
    dot_const,
    leaky_relu,
    log_clamped,
    mul,
    scale,
    sigmoid,
    softmax_channels,
    total,
)

__all__ = [
    "Function",
    "Graph",
    "Tensor",
    "backward",
    "add",
    "affine",
    "bilinear_upsample",
    "conv2d",
    "dot_const",
    "leaky_relu",
    "log_clamped",
    "mul",
    "scale",
    "sigmoid",
    "softmax_channels",
    "total",
]
