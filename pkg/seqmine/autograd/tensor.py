from __future__ import annotations

from contextvars import ContextVar
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from seqmine.errors import (
    DetachedLossError,
    GraphConsumedError,
    NonFiniteError,
    NotScalarError,
    ShapeError,
)

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_active_graph: ContextVar[Optional["Graph"]] = ContextVar("seqmine_graph", default=None)


def _check_values(data: np.ndarray, what: str = "tensor") -> None:
    if any(extent <= 0 for extent in data.shape):
        raise ShapeError(f"{what} has a zero extent", data.shape)

    if not np.isfinite(data).all():
        raise NonFiniteError(f"{what} contains NaN or Inf values")


class Tensor:
    """Dense float64 array with an optional gradient buffer.

    Values are frozen after construction; only the optimizer swaps them out
    through `assign`.
    """

    __slots__ = ("data", "requires_grad", "grad", "name")

    def __init__(
        self,
        values,
        requires_grad: bool = False,
        name: str | None = None,
    ) -> None:
        data = np.array(values, dtype=np.float64)
        _check_values(data, name or "tensor")
        data.setflags(write=False)

        self.data = data
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.name = name

    @classmethod
    def _wrap(cls, data: np.ndarray, requires_grad: bool, op: str) -> "Tensor":
        # Op outputs are fresh arrays, no copy needed
        data = np.asarray(data, dtype=np.float64)
        _check_values(data, f"output of {op}")
        data.setflags(write=False)

        out = cls.__new__(cls)
        out.data = data
        out.requires_grad = requires_grad
        out.grad = None
        out.name = None
        return out

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise NotScalarError(f"item() needs a single value, got shape {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        return np.array(self.data)

    def assign(self, values: np.ndarray) -> None:
        values = np.array(values, dtype=np.float64)
        if values.shape != self.shape:
            raise ShapeError("assign shape mismatch", self.shape, values.shape)
        _check_values(values, self.name or "tensor")
        values.setflags(write=False)
        self.data = values

    def zero_grad(self) -> None:
        self.grad = None

    def accumulate_grad(self, grad: np.ndarray) -> None:
        if grad.shape != self.shape:
            raise ShapeError("gradient shape mismatch", self.shape, grad.shape)
        if not np.isfinite(grad).all():
            raise NonFiniteError(f"gradient of <{self.name or 'tensor'}> is not finite")

        if self.grad is None:
            self.grad = np.array(grad, dtype=np.float64)
        else:
            self.grad = self.grad + grad

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{flag}{label})"

    # Operator sugar, all routed through the functional ops
    def __add__(self, other):
        from seqmine.autograd import functional as F

        return F.add(self, other)

    def __radd__(self, other):
        from seqmine.autograd import functional as F

        return F.add(other, self)

    def __sub__(self, other):
        from seqmine.autograd import functional as F

        return F.sub(self, other)

    def __rsub__(self, other):
        from seqmine.autograd import functional as F

        return F.sub(other, self)

    def __mul__(self, other):
        from seqmine.autograd import functional as F

        if isinstance(other, (int, float)):
            return F.scale(self, float(other))
        return F.mul(self, other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __neg__(self):
        from seqmine.autograd import functional as F

        return F.scale(self, -1.0)

    def __matmul__(self, other):
        from seqmine.autograd import functional as F

        return F.matmul(self, other)

    def __getitem__(self, index):
        from seqmine.autograd import functional as F

        return F.index(self, index)

    @property
    def T(self) -> "Tensor":
        from seqmine.autograd import functional as F

        return F.transpose(self)


def as_tensor(value) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


@dataclass(slots=True)
class Node:
    op: str
    output: Tensor
    inputs: tuple[Tensor, ...]
    backward_fn: BackwardFn


class Graph:
    """Tape of differentiable operations executed inside `with Graph():`.

    Nodes are appended in execution order, so the tape is topologically
    sorted by construction. One backward pass consumes the tape.
    """

    def __init__(self) -> None:
        self.nodes: list[Node] = []
        self.consumed = False
        self._token = None

    def __enter__(self) -> "Graph":
        if self.consumed:
            raise GraphConsumedError("graph was already consumed by backward()")
        self._token = _active_graph.set(self)
        return self

    def __exit__(self, *exc) -> None:
        _active_graph.reset(self._token)
        self._token = None

    def __len__(self) -> int:
        return len(self.nodes)

    def record(self, node: Node) -> None:
        if self.consumed:
            raise GraphConsumedError("cannot record on a consumed graph")
        self.nodes.append(node)

    def backward(self, loss: Tensor) -> None:
        backward(self, loss)


def record_op(
    op: str,
    data: np.ndarray,
    inputs: Iterable[Tensor],
    backward_fn: BackwardFn,
) -> Tensor:
    inputs = tuple(inputs)
    requires_grad = any(t.requires_grad for t in inputs)
    out = Tensor._wrap(data, requires_grad, op)

    graph = _active_graph.get()
    if requires_grad and graph is not None:
        graph.record(Node(op, out, inputs, backward_fn))

    return out


def backward(graph: Graph, loss: Tensor) -> None:
    """Fill `grad` of every requires_grad tensor reachable from `loss`.

    Gradients accumulate (`+=`) into existing buffers, so shared tensors
    receive the sum over all of their uses.
    """

    if graph.consumed:
        raise GraphConsumedError("graph was already consumed by backward()")

    if loss.data.ndim != 0:
        raise NotScalarError(f"loss must be a scalar, got shape {loss.shape}")

    if not loss.requires_grad:
        raise DetachedLossError("loss does not depend on any tensor requiring grad")

    pending: dict[int, np.ndarray] = {id(loss): np.ones((), dtype=np.float64)}
    holders: dict[int, Tensor] = {id(loss): loss}

    for node in reversed(graph.nodes):
        grad_out = pending.pop(id(node.output), None)
        if grad_out is None:
            continue

        node.output.accumulate_grad(grad_out)
        input_grads = node.backward_fn(grad_out)

        for tensor, grad in zip(node.inputs, input_grads):
            if grad is None or not tensor.requires_grad:
                continue

            key = id(tensor)
            if key in pending:
                pending[key] = pending[key] + grad
            else:
                pending[key] = grad
                holders[key] = tensor

    # Whatever is left belongs to leaves
    for key, grad in pending.items():
        holders[key].accumulate_grad(grad)

    graph.nodes.clear()
    graph.consumed = True
