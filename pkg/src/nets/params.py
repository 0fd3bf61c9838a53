"""Named parameter collections with seed-deterministic He initialization."""

from collections import OrderedDict
from typing import Dict, Iterator, Mapping, Tuple, Union

import numpy as np
import structlog

from src.errors import CheckpointError
from src.tensor import Tensor

logger = structlog.get_logger(__name__)

SeedLike = Union[int, np.random.SeedSequence]


def make_rng(seed: SeedLike) -> np.random.Generator:
    return np.random.default_rng(seed)


def he_normal(rng: np.random.Generator, shape: Tuple[int, ...]) -> np.ndarray:
    """Normal weights scaled by sqrt(2 / fan_in), fan_in = product of all but the first extent."""
    fan_in = int(np.prod(shape[1:]))
    return rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)


class ParameterSet:
    """
    Ordered mapping from parameter name to leaf tensor.

    The layer list is fixed at construction; ``load_state_dict`` only accepts
    the same names with the same shapes.
    """

    def __init__(self) -> None:
        self._tensors: "OrderedDict[str, Tensor]" = OrderedDict()

    def add(self, name: str, value: np.ndarray) -> Tensor:
        tensor = Tensor(value, requires_grad=True)
        self._tensors[name] = tensor
        return tensor

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._tensors)

    def __len__(self) -> int:
        return len(self._tensors)

    def items(self):
        return self._tensors.items()

    def freeze(self) -> None:
        for tensor in self._tensors.values():
            tensor.requires_grad = False

    def unfreeze(self) -> None:
        for tensor in self._tensors.values():
            tensor.requires_grad = True

    def zero_grad(self) -> None:
        for tensor in self._tensors.values():
            tensor.grad = None

    def state_dict(self, prefix: str = "") -> Dict[str, np.ndarray]:
        return {f"{prefix}{name}": t.data.copy() for name, t in self._tensors.items()}

    def load_state_dict(self, state: Mapping[str, np.ndarray], prefix: str = "") -> None:
        for name, tensor in self._tensors.items():
            key = f"{prefix}{name}"
            if key not in state:
                raise CheckpointError(f"checkpoint has no tensor named {key!r}")
            value = np.asarray(state[key], dtype=np.float64)
            if value.shape != tensor.shape:
                raise CheckpointError(
                    f"tensor {key!r} has shape {value.shape}, network expects {tensor.shape}"
                )
            tensor.data = value.copy()
            tensor.grad = None
