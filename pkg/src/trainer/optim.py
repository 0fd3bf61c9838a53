"""
SGD with momentum for the generator and Adam for the discriminator.

The step functions update arrays in place and are what the optimizer classes
apply to each tensor of a ParameterSet. Frozen tensors are skipped; a tensor
without a gradient counts as having a zero gradient.
"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from src.errors import ShapeError
from src.nets.params import ParameterSet


def _require_match(param: np.ndarray, grad: np.ndarray, what: str) -> None:
    if param.shape != grad.shape:
        raise ShapeError(f"{what}: parameter shape {param.shape} does not match gradient shape {grad.shape}")


def sgd_momentum_step(
    param: np.ndarray,
    grad: np.ndarray,
    velocity: np.ndarray,
    lr: float,
    momentum: float,
    weight_decay: float,
) -> None:
    """``v <- momentum * v + grad + weight_decay * param``; ``param <- param - lr * v``."""
    _require_match(param, grad, "sgd")
    _require_match(param, velocity, "sgd velocity")
    velocity *= momentum
    velocity += grad + weight_decay * param
    param -= lr * velocity


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros_like(cls, param: np.ndarray) -> "AdamState":
        return cls(m=np.zeros_like(param), v=np.zeros_like(param))


def adam_step(
    param: np.ndarray,
    grad: np.ndarray,
    state: AdamState,
    lr: float,
    betas: Tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
) -> None:
    """Bias-corrected Adam update of ``param`` in place."""
    _require_match(param, grad, "adam")
    _require_match(param, state.m, "adam state")
    beta1, beta2 = betas
    state.t += 1
    state.m *= beta1
    state.m += (1.0 - beta1) * grad
    state.v *= beta2
    state.v += (1.0 - beta2) * grad * grad
    m_hat = state.m / (1.0 - beta1 ** state.t)
    v_hat = state.v / (1.0 - beta2 ** state.t)
    param -= lr * m_hat / (np.sqrt(v_hat) + eps)


def _grad_or_zeros(tensor) -> np.ndarray:
    return np.zeros_like(tensor.data) if tensor.grad is None else tensor.grad


@dataclass
class SGDMomentum:
    params: ParameterSet
    momentum: float = 0.9
    weight_decay: float = 1e-4
    velocity: Dict[str, np.ndarray] = field(default_factory=dict)

    def step(self, lr: float) -> None:
        for name, tensor in self.params.items():
            if not tensor.requires_grad:
                continue
            v = self.velocity.setdefault(name, np.zeros_like(tensor.data))
            sgd_momentum_step(tensor.data, _grad_or_zeros(tensor), v, lr, self.momentum, self.weight_decay)


@dataclass
class Adam:
    params: ParameterSet
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    state: Dict[str, AdamState] = field(default_factory=dict)

    def step(self, lr: float) -> None:
        for name, tensor in self.params.items():
            if not tensor.requires_grad:
                continue
            s: Optional[AdamState] = self.state.get(name)
            if s is None:
                s = self.state[name] = AdamState.zeros_like(tensor.data)
            adam_step(tensor.data, _grad_or_zeros(tensor), s, lr, self.betas, self.eps)
