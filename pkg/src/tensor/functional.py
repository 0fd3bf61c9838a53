"""
Differentiable operations used by the networks and the losses.

Conventions:

- Layout is batch x channel x height x width.
- ``conv2d`` pads with zeros; bias is the only broadcast (over channels).
- ``leaky_relu`` uses the slope as subgradient at exactly zero.
- ``bilinear_upsample`` follows the align-corners-false convention: output
  index ``i`` samples source coordinate ``(i + 0.5) * h / out_h - 0.5``,
  clamped to ``[0, h - 1]``, and interpolates linearly between
  ``floor(src)`` and ``min(floor(src) + 1, h - 1)``. Width is treated the same
  way. The op is a fixed linear map per axis, so its backward pass is the
  transposed map.
- ``log_clamped`` evaluates ``log(max(x, floor))``; the gradient is zero where
  the floor is active.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.errors import ShapeError
from src.tensor.tensor import Function, Tensor


def _require_order(t: Tensor, order: int, what: str) -> None:
    if t.ndim != order:
        raise ShapeError(f"{what} must have {order} dimensions, got shape {t.shape}")


def _require_same_shape(a: Tensor, b: Tensor, what: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{what}: shapes {a.shape} and {b.shape} differ")


# ---------------------------------------------------------------------------
# convolution
# ---------------------------------------------------------------------------


class Conv2d(Function):
    def forward(self, x, w, b, *, stride: int, padding: int) -> np.ndarray:
        kh, kw = w.shape[2], w.shape[3]
        if padding:
            x = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
        h_out = (x.shape[2] - kh) // stride + 1
        w_out = (x.shape[3] - kw) // stride + 1
        cols = sliding_window_view(x, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
        cols = cols[:, :, :h_out, :w_out]
        out = np.tensordot(cols, w, axes=([1, 4, 5], [1, 2, 3]))
        out = out.transpose(0, 3, 1, 2) + b[None, :, None, None]
        self.save_for_backward(x.shape, cols, w, stride, padding)
        return np.ascontiguousarray(out)

    def backward(self, grad):
        padded_shape, cols, w, stride, padding = self.saved
        kh, kw = w.shape[2], w.shape[3]
        h_out, w_out = grad.shape[2], grad.shape[3]

        grad_x = grad_w = grad_b = None
        if self.needs_grad(0):
            gx = np.zeros(padded_shape, dtype=np.float64)
            h_span = stride * (h_out - 1) + 1
            w_span = stride * (w_out - 1) + 1
            for i in range(kh):
                for j in range(kw):
                    contrib = np.tensordot(grad, w[:, :, i, j], axes=([1], [0]))
                    gx[:, :, i:i + h_span:stride, j:j + w_span:stride] += contrib.transpose(0, 3, 1, 2)
            if padding:
                gx = gx[:, :, padding:-padding, padding:-padding]
            grad_x = np.ascontiguousarray(gx)
        if self.needs_grad(1):
            grad_w = np.tensordot(grad, cols, axes=([0, 2, 3], [0, 2, 3]))
        if self.needs_grad(2):
            grad_b = grad.sum(axis=(0, 2, 3))
        return grad_x, grad_w, grad_b


def conv2d(input: Tensor, weight: Tensor, bias: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """
    2-D cross-correlation with zero padding.

    Args:
        input: ``[B, Cin, H, W]``
        weight: ``[Cout, Cin, kh, kw]``
        bias: ``[Cout]``
        stride: Positive step between windows.
        padding: Zeros added on every spatial border.

    Returns:
        Tensor: ``[B, Cout, H', W']`` with ``H' = (H + 2 * padding - kh) // stride + 1``.
    """
    _require_order(input, 4, "conv2d input")
    _require_order(weight, 4, "conv2d weight")
    _require_order(bias, 1, "conv2d bias")
    if input.shape[1] != weight.shape[1]:
        raise ShapeError(
            f"conv2d channel mismatch: input shape {input.shape} has {input.shape[1]} channels, "
            f"weight shape {weight.shape} expects {weight.shape[1]}"
        )
    if bias.shape[0] != weight.shape[0]:
        raise ShapeError(f"conv2d bias shape {bias.shape} does not match weight shape {weight.shape}")
    if stride < 1:
        raise ShapeError(f"conv2d stride must be positive, got {stride}")
    if padding < 0:
        raise ShapeError(f"conv2d padding must be non-negative, got {padding}")
    _, _, h, w = input.shape
    kh, kw = weight.shape[2], weight.shape[3]
    if h + 2 * padding < kh or w + 2 * padding < kw:
        raise ShapeError(
            f"conv2d kernel {kh}x{kw} does not fit input shape {input.shape} with padding {padding}"
        )
    return Conv2d.apply(input, weight, bias, stride=stride, padding=padding)


# ---------------------------------------------------------------------------
# activations
# ---------------------------------------------------------------------------


class LeakyReLU(Function):
    def forward(self, x, *, slope: float) -> np.ndarray:
        positive = x > 0
        self.save_for_backward(positive, slope)
        return np.where(positive, x, slope * x)

    def backward(self, grad):
        positive, slope = self.saved
        return (np.where(positive, grad, slope * grad),)


def leaky_relu(input: Tensor, slope: float) -> Tensor:
    """Elementwise ``max(x, slope * x)`` for slope in (0, 1)."""
    if not 0.0 < slope < 1.0:
        raise ValueError(f"leaky_relu slope must lie in (0, 1), got {slope}")
    return LeakyReLU.apply(input, slope=slope)


class Sigmoid(Function):
    def forward(self, x) -> np.ndarray:
        e = np.exp(-np.abs(x))
        out = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
        self.save_for_backward(out)
        return out

    def backward(self, grad):
        (out,) = self.saved
        return (grad * out * (1.0 - out),)


def sigmoid(input: Tensor) -> Tensor:
    return Sigmoid.apply(input)


class SoftmaxChannels(Function):
    def forward(self, x) -> np.ndarray:
        z = x - x.max(axis=1, keepdims=True)
        e = np.exp(z)
        out = e / e.sum(axis=1, keepdims=True)
        self.save_for_backward(out)
        return out

    def backward(self, grad):
        (out,) = self.saved
        inner = (grad * out).sum(axis=1, keepdims=True)
        return (out * (grad - inner),)


def softmax_channels(input: Tensor) -> Tensor:
    """Per-pixel softmax over the channel axis of a ``[B, C, H, W]`` tensor."""
    _require_order(input, 4, "softmax_channels input")
    if input.shape[1] < 2:
        raise ShapeError(f"softmax_channels needs at least 2 channels, got shape {input.shape}")
    return SoftmaxChannels.apply(input)


# ---------------------------------------------------------------------------
# resampling
# ---------------------------------------------------------------------------


def interpolation_matrix(n_in: int, n_out: int) -> np.ndarray:
    """Row ``i`` holds the bilinear weights output index ``i`` puts on the input axis."""
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    lo = np.floor(src).astype(np.int64)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = src - lo
    matrix = np.zeros((n_out, n_in), dtype=np.float64)
    rows = np.arange(n_out)
    np.add.at(matrix, (rows, lo), 1.0 - frac)
    np.add.at(matrix, (rows, hi), frac)
    return matrix


class BilinearUpsample(Function):
    def forward(self, x, *, out_h: int, out_w: int) -> np.ndarray:
        rows = interpolation_matrix(x.shape[2], out_h)
        cols = interpolation_matrix(x.shape[3], out_w)
        self.save_for_backward(rows, cols)
        return np.matmul(np.matmul(rows, x), cols.T)

    def backward(self, grad):
        rows, cols = self.saved
        return (np.matmul(np.matmul(rows.T, grad), cols),)


def bilinear_upsample(input: Tensor, out_h: int, out_w: int) -> Tensor:
    """Resize ``[B, C, h, w]`` to ``[B, C, out_h, out_w]`` (see module docs for the convention)."""
    _require_order(input, 4, "bilinear_upsample input")
    h, w = input.shape[2], input.shape[3]
    if out_h < h or out_w < w:
        raise ShapeError(f"bilinear_upsample cannot shrink {h}x{w} to {out_h}x{out_w}")
    return BilinearUpsample.apply(input, out_h=out_h, out_w=out_w)


# ---------------------------------------------------------------------------
# elementwise and reductions
# ---------------------------------------------------------------------------


class LogClamped(Function):
    def forward(self, x, *, floor: float) -> np.ndarray:
        active = x > floor
        self.save_for_backward(active, x)
        return np.log(np.where(active, x, floor))

    def backward(self, grad):
        active, x = self.saved
        safe = np.where(active, x, 1.0)
        return (np.where(active, grad / safe, 0.0),)


def log_clamped(input: Tensor, floor: float = 1e-12) -> Tensor:
    return LogClamped.apply(input, floor=floor)


class Affine(Function):
    def forward(self, x, *, a: float, b: float) -> np.ndarray:
        self.save_for_backward(a)
        return a * x + b

    def backward(self, grad):
        (a,) = self.saved
        return (a * grad,)


def affine(input: Tensor, a: float, b: float = 0.0) -> Tensor:
    """``a * x + b`` with scalar constants."""
    return Affine.apply(input, a=float(a), b=float(b))


def scale(input: Tensor, factor: float) -> Tensor:
    return Affine.apply(input, a=float(factor), b=0.0)


class Add(Function):
    def forward(self, a, b) -> np.ndarray:
        return a + b

    def backward(self, grad):
        return grad, grad


def add(a: Tensor, b: Tensor) -> Tensor:
    _require_same_shape(a, b, "add")
    return Add.apply(a, b)


class Mul(Function):
    def forward(self, a, b) -> np.ndarray:
        self.save_for_backward(a, b)
        return a * b

    def backward(self, grad):
        a, b = self.saved
        return grad * b, grad * a


def mul(a: Tensor, b: Tensor) -> Tensor:
    _require_same_shape(a, b, "mul")
    return Mul.apply(a, b)


class Total(Function):
    def forward(self, x) -> np.ndarray:
        self.save_for_backward(x.shape)
        return np.asarray(x.sum())

    def backward(self, grad):
        (shape,) = self.saved
        return (np.full(shape, float(grad)),)


def total(input: Tensor) -> Tensor:
    """Sum of all elements, as a scalar tensor."""
    return Total.apply(input)


class DotConst(Function):
    def forward(self, x, *, coeff: np.ndarray) -> np.ndarray:
        self.save_for_backward(coeff)
        return np.asarray(np.sum(x * coeff))

    def backward(self, grad):
        (coeff,) = self.saved
        return (float(grad) * coeff,)


def dot_const(input: Tensor, coeff: np.ndarray) -> Tensor:
    """``sum(x * coeff)`` where ``coeff`` is a constant array of the same shape."""
    coeff = np.asarray(coeff, dtype=np.float64)
    if coeff.shape != input.shape:
        raise ShapeError(f"dot_const: coefficient shape {coeff.shape} does not match {input.shape}")
    return DotConst.apply(input, coeff=coeff)
