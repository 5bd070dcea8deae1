"""Reverse-mode autodiff over dense float64 arrays.

A Tape records value nodes (Var) in creation order, which is a topological
order of the computation graph. backward() seeds the loss gradient and walks
the tape in reverse, so each node's backward closure runs exactly once, after
all of its consumers.

Parameters are persistent leaf Vars with a stable id and a trainable flag;
non-trainable parameters never accumulate gradient (their reported gradient
is identically zero), which is how a frozen backbone stays frozen.
"""

from __future__ import annotations

from typing import Callable, Dict, Optional

import numpy as np

from ..errors import GraphError


def _as_f64(value) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    return arr


class Var:
    """One value node. grad is populated lazily during backward."""

    __slots__ = ("value", "grad", "requires_grad", "_backward", "_tape", "_index")

    def __init__(self, value, requires_grad: bool = True):
        self.value = _as_f64(value)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self._backward: Optional[Callable[[np.ndarray], None]] = None
        self._tape: Optional["Tape"] = None
        self._index = -1

    @property
    def shape(self):
        return self.value.shape

    def accumulate(self, g: np.ndarray):
        """Add a gradient contribution (no-op when gradients are not wanted)."""
        if not self.requires_grad:
            return
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        self.grad += g


class Parameter(Var):
    """Persistent trainable leaf with a stable identifier."""

    __slots__ = ("id", "trainable")

    def __init__(self, id: str, value, trainable: bool = True):
        super().__init__(value, requires_grad=trainable)
        self.id = id
        self.trainable = trainable

    def zero_grad(self):
        self.grad = None

    def grad_or_zeros(self) -> np.ndarray:
        if self.grad is None:
            return np.zeros_like(self.value)
        return self.grad


class Tape:
    """Ordered record of Vars created by ops during one forward pass."""

    def __init__(self):
        self.nodes: list[Var] = []

    def record(self, value, backward: Optional[Callable[[np.ndarray], None]] = None,
               requires_grad: bool = True) -> Var:
        v = Var(value, requires_grad=requires_grad)
        v._backward = backward
        v._tape = self
        v._index = len(self.nodes)
        self.nodes.append(v)
        return v

    def release(self):
        """Drop the recorded graph, breaking its reference cycles.

        Backward closures capture their input buffers (notably the im2col
        workspaces of convolutions) and every node points back at the tape,
        so a finished graph is a cycle that waits for the cyclic collector
        while pinning hundreds of megabytes. Callers that build a tape per
        batch must release it once the loss value and parameter gradients
        have been read out; node values and parameter state are unaffected.
        """
        for node in self.nodes:
            node._backward = None
            node._tape = None
        self.nodes.clear()


def backward(tape: Tape, loss: Var):
    """Run reverse-mode accumulation from a scalar loss recorded on `tape`."""
    if loss._tape is not tape:
        raise GraphError("loss is not a node of this tape")
    if loss.value.size != 1:
        raise GraphError(f"loss must be scalar, got shape {loss.value.shape}")
    loss.grad = np.ones_like(loss.value)
    for node in reversed(tape.nodes[: loss._index + 1]):
        if node.grad is None or node._backward is None:
            continue
        node._backward(node.grad)


def collect_grads(params: Dict[str, Parameter]) -> Dict[str, np.ndarray]:
    """Gradient per parameter id; frozen/untouched parameters yield zeros."""
    return {name: p.grad_or_zeros() for name, p in params.items()}


def zero_grads(params: Dict[str, Parameter]):
    for p in params.values():
        p.zero_grad()
