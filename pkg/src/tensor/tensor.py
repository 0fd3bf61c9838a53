"""
Tensor and graph recording.

A Tensor wraps a float64 numpy array of order at most 4 (batch x channel x
height x width). Operations are Function subclasses; applying one to inputs
that require gradients records a node whose id comes from a process-wide
creation counter. ``backward`` collects the nodes reachable from a scalar
loss and runs them in exact reverse creation order, so every intermediate
has received all of its gradient before its own creator runs.

A graph can be differentiated once. Saved activations are released after
the pass and a second ``backward`` on the same loss raises GraphError; run
the forward pass again to get a fresh graph. Leaf gradients accumulate until
``zero_grad`` is called.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, List, Optional, Sequence, Tuple, Union

import numpy as np
import structlog

from src.errors import GraphError, ShapeError

logger = structlog.get_logger(__name__)

MAX_ORDER = 4

_node_ids = itertools.count()

ArrayLike = Union[np.ndarray, float, int, Sequence[float]]


class Function:
    """
    Base class for differentiable operations.

    Subclasses implement ``forward`` on raw arrays and ``backward`` mapping the
    gradient w.r.t. the output to one gradient (or None) per input.
    """

    def __init__(self, *inputs: "Tensor"):
        self.inputs: Tuple["Tensor", ...] = inputs
        self.node_id = next(_node_ids)
        self.out_grad: Optional[np.ndarray] = None
        self.consumed = False
        self.saved: Tuple[Any, ...] = ()

    def save_for_backward(self, *values: Any) -> None:
        self.saved = values

    def needs_grad(self, index: int) -> bool:
        return self.inputs[index].requires_grad

    def forward(self, *arrays: np.ndarray, **kwargs: Any) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__}.forward")

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        raise NotImplementedError(f"{type(self).__name__}.backward")

    def release(self) -> None:
        self.saved = ()
        self.out_grad = None
        self.consumed = True

    @classmethod
    def apply(cls, *inputs: "Tensor", **kwargs: Any) -> "Tensor":
        """Run the forward pass and record a node when any input needs gradients."""
        fn = cls(*inputs)
        out = fn.forward(*(t.data for t in inputs), **kwargs)
        requires_grad = any(t.requires_grad for t in inputs)
        return Tensor(out, requires_grad=requires_grad, creator=fn if requires_grad else None)


class Tensor:
    """n-dimensional float64 array with optional gradient accumulation."""

    __slots__ = ("data", "grad", "requires_grad", "creator")

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        creator: Optional[Function] = None,
    ):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim > MAX_ORDER:
            raise ShapeError(f"tensor order is limited to {MAX_ORDER}, got shape {arr.shape}")
        self.data: np.ndarray = arr
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = bool(requires_grad)
        self.creator = creator

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def is_leaf(self) -> bool:
        return self.creator is None

    def item(self) -> float:
        return float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        """Same values, cut from the graph."""
        return Tensor(self.data, requires_grad=False)

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> "Graph":
        return backward(self)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"


@dataclass
class Graph:
    """Nodes reachable from a loss, in the order backward visits them."""

    nodes: List[Function] = field(default_factory=list)

    @classmethod
    def from_output(cls, output: Tensor) -> "Graph":
        if output.creator is None:
            return cls()
        seen = {id(output.creator): output.creator}
        stack = [output.creator]
        while stack:
            fn = stack.pop()
            for t in fn.inputs:
                parent = t.creator
                if parent is not None and id(parent) not in seen:
                    seen[id(parent)] = parent
                    stack.append(parent)
        nodes = sorted(seen.values(), key=lambda fn: fn.node_id, reverse=True)
        return cls(nodes=nodes)

    @property
    def order(self) -> List[int]:
        return [fn.node_id for fn in self.nodes]


def _accumulate(t: Tensor, grad: np.ndarray) -> None:
    if grad.shape != t.shape:
        raise GraphError(f"gradient shape {grad.shape} does not match tensor shape {t.shape}")
    if t.creator is not None:
        t.creator.out_grad = grad if t.creator.out_grad is None else t.creator.out_grad + grad
    else:
        t.grad = grad.copy() if t.grad is None else t.grad + grad


def backward(loss: Tensor) -> Graph:
    """
    Populate ``grad`` on every leaf that requires it.

    Args:
        loss: Scalar (shape ``()``) tensor produced by recorded operations.

    Returns:
        Graph: The nodes that were differentiated, in visiting order.

    Raises:
        GraphError: If the loss is not a scalar or its graph was already used.
    """
    if loss.shape != ():
        raise GraphError(f"backward needs a scalar loss, got shape {loss.shape}")

    graph = Graph.from_output(loss)
    if any(fn.consumed for fn in graph.nodes):
        raise GraphError("backward already ran on this graph; run the forward pass again")

    seed = np.ones((), dtype=np.float64)
    if loss.creator is None:
        if loss.requires_grad:
            _accumulate(loss, seed)
        return graph

    loss.creator.out_grad = seed
    for fn in graph.nodes:
        grad = fn.out_grad
        if grad is None:
            fn.release()
            continue
        input_grads = fn.backward(grad)
        for t, g in zip(fn.inputs, input_grads):
            if g is None or not t.requires_grad:
                continue
            _accumulate(t, g)
        fn.release()

    logger.debug("Backward pass complete", nodes=len(graph.nodes))
    return graph
