"""Central finite-difference checks of every differentiable operation."""

import numpy as np
import pytest

from src.nets import DiscriminatorParams, GeneratorParams, discriminator_forward, generator_forward
from src.nets import discriminator as discriminator_module
from src.nets import generator as generator_module
from src.tensor import (
    Tensor,
    add,
    affine,
    backward,
    bilinear_upsample,
    conv2d,
    dot_const,
    leaky_relu,
    log_clamped,
    mul,
    sigmoid,
    softmax_channels,
    total,
)

H = 1e-5
TOLERANCE = 1e-4


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = max(np.linalg.norm(analytic) + np.linalg.norm(numeric), 1e-12)
    return float(np.linalg.norm(analytic - numeric) / scale)


def check_gradients(build, arrays):
    """
    ``build(*tensors)`` returns a scalar Tensor. Every array is perturbed in
    place, element by element, and compared with the autodiff gradient.
    """
    tensors = [Tensor(a, requires_grad=True) for a in arrays]
    backward(build(*tensors))
    for array, tensor in zip(arrays, tensors):
        numeric = np.zeros_like(array)
        for idx in np.ndindex(array.shape):
            orig = array[idx]
            array[idx] = orig + H
            plus = build(*[Tensor(a) for a in arrays]).item()
            array[idx] = orig - H
            minus = build(*[Tensor(a) for a in arrays]).item()
            array[idx] = orig
            numeric[idx] = (plus - minus) / (2 * H)
        assert relative_error(tensor.grad, numeric) < TOLERANCE


def projection(rng, shape):
    return rng.standard_normal(shape)


@pytest.mark.parametrize("stride,padding", [(1, 1), (2, 1), (2, 0)])
def test_conv2d(rng, stride, padding):
    x = rng.standard_normal((2, 2, 5, 5))
    w = rng.standard_normal((3, 2, 3, 3))
    b = rng.standard_normal(3)
    out_shape = conv2d(Tensor(x), Tensor(w), Tensor(b), stride=stride, padding=padding).shape
    coeff = projection(rng, out_shape)
    check_gradients(lambda x, w, b: dot_const(conv2d(x, w, b, stride=stride, padding=padding), coeff), [x, w, b])


def test_leaky_relu(rng):
    x = rng.standard_normal((1, 2, 3, 3))
    coeff = projection(rng, x.shape)
    check_gradients(lambda x: dot_const(leaky_relu(x, 0.2), coeff), [x])


def test_sigmoid(rng):
    x = rng.standard_normal((1, 2, 3, 3)) * 3
    coeff = projection(rng, x.shape)
    check_gradients(lambda x: dot_const(sigmoid(x), coeff), [x])


def test_softmax_channels(rng):
    x = rng.standard_normal((2, 4, 2, 3))
    coeff = projection(rng, x.shape)
    check_gradients(lambda x: dot_const(softmax_channels(x), coeff), [x])


def test_bilinear_upsample(rng):
    x = rng.standard_normal((1, 2, 3, 2))
    coeff = projection(rng, (1, 2, 8, 5))
    check_gradients(lambda x: dot_const(bilinear_upsample(x, 8, 5), coeff), [x])


def test_log_clamped(rng):
    x = rng.uniform(0.1, 1.0, (2, 3))
    coeff = projection(rng, x.shape)
    check_gradients(lambda x: dot_const(log_clamped(x), coeff), [x])


def test_affine_add_mul_total(rng):
    a = rng.standard_normal((2, 3))
    b = rng.standard_normal((2, 3))
    check_gradients(lambda a, b: total(mul(add(affine(a, 1.5, -0.3), b), b)), [a, b])


UNARY = ("sigmoid", "leaky", "softmax", "affine", "gate", "residual", "conv", "log_sigmoid")


def compose(ops, kernel, bias):
    def build(x):
        y = x
        for op in ops:
            if op == "sigmoid":
                y = sigmoid(y)
            elif op == "leaky":
                y = leaky_relu(y, 0.1)
            elif op == "softmax":
                y = softmax_channels(y)
            elif op == "affine":
                y = affine(y, 0.7, 0.1)
            elif op == "gate":
                y = mul(y, sigmoid(y))
            elif op == "residual":
                y = add(y, sigmoid(y))
            elif op == "conv":
                y = conv2d(y, Tensor(kernel), Tensor(bias), stride=1, padding=1)
            elif op == "log_sigmoid":
                y = log_clamped(sigmoid(y))
        return total(y)

    return build


@pytest.mark.parametrize("case", range(20))
def test_random_compositions(case):
    rng = np.random.default_rng(1000 + case)
    depth = int(rng.integers(1, 7))
    ops = [UNARY[i] for i in rng.integers(0, len(UNARY), depth)]
    kernel = rng.standard_normal((2, 2, 3, 3)) * 0.3
    bias = rng.standard_normal(2) * 0.1
    x = rng.standard_normal((1, 2, 3, 3))
    check_gradients(compose(ops, kernel, bias), [x])


DIRECTIONAL_H = 1e-6
MAX_DIRECTIONS = 20


@pytest.fixture
def activation_signs(monkeypatch):
    """Records which leaky-ReLU inputs of the nets are positive, per forward pass."""
    records = []

    def recording(x, slope):
        records.append(x.data > 0)
        return leaky_relu(x, slope)

    monkeypatch.setattr(discriminator_module, "leaky_relu", recording)
    monkeypatch.setattr(generator_module, "leaky_relu", recording)
    return records


def directional_check(params, forward, rng, signs):
    """
    Compare the gradient along a random direction for every tensor of ``params``.

    A direction whose steps flip the sign of any leaky-ReLU input is redrawn;
    both evaluations stay on one linear piece of every activation.
    """
    params.zero_grad()
    signs.clear()
    backward(forward())
    baseline = list(signs)
    for name, tensor in params.items():
        original = tensor.data.copy()
        for _ in range(MAX_DIRECTIONS):
            direction = rng.standard_normal(tensor.shape)
            values, smooth = [], True
            for step in (DIRECTIONAL_H, -DIRECTIONAL_H):
                signs.clear()
                tensor.data = original + step * direction
                values.append(forward().item())
                smooth = smooth and all(np.array_equal(a, b) for a, b in zip(signs, baseline))
            tensor.data = original
            if smooth:
                break
        else:
            pytest.fail(f"{name}: no direction in {MAX_DIRECTIONS} avoids the leaky-ReLU kink")
        analytic = float(np.sum(tensor.grad * direction))
        numeric = (values[0] - values[1]) / (2 * DIRECTIONAL_H)
        assert abs(analytic - numeric) <= TOLERANCE * max(abs(analytic) + abs(numeric), 1e-8), name



def test_generator_parameter_gradients(rng, activation_signs):
    params = GeneratorParams.initialize(3, seed=5)
    image = Tensor(rng.uniform(0.0, 1.0, (1, 3, 16, 16)))
    coeff = projection(rng, (1, 3, 16, 16))
    directional_check(params, lambda: dot_const(generator_forward(params, image), coeff), rng, activation_signs)


def test_discriminator_parameter_gradients(rng, activation_signs):
    params = DiscriminatorParams.initialize(3, seed=6)
    probs = softmax_channels(Tensor(rng.standard_normal((1, 3, 32, 32)))).detach()
    coeff = projection(rng, (1, 1, 32, 32))
    directional_check(params, lambda: dot_const(discriminator_forward(params, probs), coeff), rng, activation_signs)
