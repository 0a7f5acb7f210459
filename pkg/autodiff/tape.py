"""
Computation graph and differentiable values.

A ``Graph`` records every operation whose inputs require gradients as a
``Node`` in an append-only list, so parents always precede children. Reverse
passes run their vector-Jacobian products through the same primitives; when
they are recorded (``create_graph``) the gradient is itself a graph value and
can be differentiated again.

Generations count nesting: forward values are generation 0 and a reverse pass
over a generation-k scalar records generation k+1 nodes.
"""

import contextlib
from typing import Any, Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from errors import GraphError
from tensor.kernels import as_tensor

MAX_GENERATION = 3

Vjp = Callable[["Var", "Var"], Sequence[Optional["Var"]]]


class Node:
    __slots__ = ("op", "parents", "vjp", "out")

    def __init__(self, op: str, parents: Tuple["Var", ...], vjp: Optional[Vjp], out: "Var"):
        self.op = op
        self.parents = parents
        self.vjp = vjp
        self.out = out


class Graph:
    """Append-only record of differentiable operations."""

    def __init__(self):
        self.nodes: List[Node] = []
        self.generation = 0
        self.recording = True

    def __len__(self) -> int:
        return len(self.nodes)

    def leaf(self, value: Any, *, name: Optional[str] = None) -> "Var":
        """Create a differentiation target."""
        var = Var(as_tensor(value, op=f"leaf {name or ''}".strip()), self, None, True, 0, name)
        var.node_id = len(self.nodes)
        self.nodes.append(Node("leaf", (), None, var))
        return var

    def constant(self, value: Any) -> "Var":
        return Var(as_tensor(value, op="constant"), self, None, False, 0)

    def record(self, op: str, value: np.ndarray, parents: Tuple["Var", ...], vjp: Vjp) -> "Var":
        value = as_tensor(value, op=op)
        if not (self.recording and any(p.requires_grad for p in parents)):
            return Var(value, self, None, False, 0)
        generation = max([self.generation] + [p.generation for p in parents if p.requires_grad])
        var = Var(value, self, len(self.nodes), True, generation)
        self.nodes.append(Node(op, parents, vjp, var))
        return var

    @contextlib.contextmanager
    def reverse_scope(self, generation: int, record: bool) -> Iterator[None]:
        saved = (self.generation, self.recording)
        self.generation = generation
        self.recording = record and saved[1]
        try:
            yield
        finally:
            self.generation, self.recording = saved

    @contextlib.contextmanager
    def no_record(self) -> Iterator[None]:
        saved = self.recording
        self.recording = False
        try:
            yield
        finally:
            self.recording = saved

    def lift(self, other: Any) -> "Var":
        if isinstance(other, Var):
            if other.graph is not self:
                raise GraphError("operands belong to different graphs")
            return other
        return self.constant(other)


class Var:
    """A tensor value tied to one ``Graph``."""

    __slots__ = ("value", "graph", "node_id", "requires_grad", "generation", "name")

    # keep numpy from broadcasting Vars element by element
    __array_ufunc__ = None

    def __init__(
        self,
        value: np.ndarray,
        graph: Graph,
        node_id: Optional[int],
        requires_grad: bool,
        generation: int,
        name: Optional[str] = None,
    ):
        self.value = value
        self.graph = graph
        self.node_id = node_id
        self.requires_grad = requires_grad
        self.generation = generation
        self.name = name

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Var(shape={self.shape}, gen={self.generation}, requires_grad={self.requires_grad}{tag})"

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    @property
    def size(self) -> int:
        return self.value.size

    @property
    def T(self) -> "Var":
        return ops.transpose(self)

    def item(self) -> float:
        return float(self.value)

    def numpy(self) -> np.ndarray:
        return self.value

    def __add__(self, other):
        return ops.add(self, other)

    def __radd__(self, other):
        return ops.add(self.graph.lift(other), self)

    def __sub__(self, other):
        return ops.sub(self, other)

    def __rsub__(self, other):
        return ops.sub(self.graph.lift(other), self)

    def __mul__(self, other):
        return ops.mul(self, other)

    def __rmul__(self, other):
        return ops.mul(self.graph.lift(other), self)

    def __truediv__(self, other):
        if isinstance(other, Var):
            return ops.div(self, other)
        return ops.mul(self, 1.0 / float(other))

    def __rtruediv__(self, other):
        return ops.div(self.graph.lift(other), self)

    def __neg__(self):
        return ops.neg(self)

    def __matmul__(self, other):
        return ops.matmul(self, other)

    def __rmatmul__(self, other):
        return ops.matmul(self.graph.lift(other), self)

    def __getitem__(self, index):
        return ops.getitem(self, index)

    def sum(self, axis: Optional[int] = None) -> "Var":
        return ops.sum(self, axis)

    def mean(self, axis: Optional[int] = None) -> "Var":
        return ops.mean(self, axis)

    def reshape(self, *shape) -> "Var":
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return ops.reshape(self, shape)

    def tanh(self) -> "Var":
        return ops.tanh(self)

    def relu(self) -> "Var":
        return ops.relu(self)

    def softplus(self) -> "Var":
        return ops.softplus(self)

    def exp(self) -> "Var":
        return ops.exp(self)

    def log(self) -> "Var":
        return ops.log(self)

    def square(self) -> "Var":
        return ops.square(self)


from autodiff import ops  # noqa: E402  (ops needs Var defined first)
