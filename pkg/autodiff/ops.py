"""
Differentiable primitives.

Every vector-Jacobian product below is written with these same primitives,
which is what lets a recorded reverse pass be differentiated again. Keep it
that way when adding an op: no raw numpy inside a vjp except for constant
masks.

Broadcasting is limited to what rank-2 models need: scalars against
anything, and a length-n vector against the rows of a (B×n) matrix.
"""

import builtins
from typing import Any, Optional, Sequence, Tuple

import numpy as np

from errors import DimensionError, GraphError, RankError

from .tape import Var


def _pair(a: Any, b: Any) -> Tuple[Var, Var]:
    if isinstance(a, Var):
        return a, a.graph.lift(b)
    if isinstance(b, Var):
        return b.graph.lift(a), b
    raise GraphError("at least one operand must be a Var")


def _check_broadcast(op: str, a: Var, b: Var) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError as exc:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} do not broadcast") from exc


def _keepdims_shape(shape: Tuple[int, ...], axis: Optional[int]) -> Tuple[int, ...]:
    if axis is None:
        return (1,) * len(shape)
    axis = axis % len(shape)
    return tuple(1 if i == axis else n for i, n in enumerate(shape))


def unbroadcast(ct: Var, shape: Tuple[int, ...]) -> Var:
    """Sum ``ct`` down to ``shape`` (adjoint of broadcasting)."""
    if ct.shape == shape:
        return ct
    if shape == ():
        return sum(ct)
    out = ct
    while out.ndim > len(shape):
        out = sum(out, axis=0)
    for axis, (have, want) in enumerate(zip(out.shape, shape)):
        if want == 1 and have != 1:
            out = reshape(sum(out, axis=axis), _keepdims_shape(out.shape, axis))
    return out


def stop_gradient(a: Var) -> Var:
    return a.graph.constant(a.value)


def add(a: Any, b: Any) -> Var:
    a, b = _pair(a, b)
    _check_broadcast("add", a, b)

    def vjp(out, ct):
        return (
            unbroadcast(ct, a.shape) if a.requires_grad else None,
            unbroadcast(ct, b.shape) if b.requires_grad else None,
        )

    return a.graph.record("add", a.value + b.value, (a, b), vjp)


def sub(a: Any, b: Any) -> Var:
    a, b = _pair(a, b)
    _check_broadcast("sub", a, b)

    def vjp(out, ct):
        return (
            unbroadcast(ct, a.shape) if a.requires_grad else None,
            unbroadcast(neg(ct), b.shape) if b.requires_grad else None,
        )

    return a.graph.record("sub", a.value - b.value, (a, b), vjp)


def mul(a: Any, b: Any) -> Var:
    a, b = _pair(a, b)
    _check_broadcast("mul", a, b)

    def vjp(out, ct):
        return (
            unbroadcast(mul(ct, b), a.shape) if a.requires_grad else None,
            unbroadcast(mul(ct, a), b.shape) if b.requires_grad else None,
        )

    return a.graph.record("mul", a.value * b.value, (a, b), vjp)


def div(a: Any, b: Any) -> Var:
    a, b = _pair(a, b)
    _check_broadcast("div", a, b)

    # d(a/b)/db = -(a/b)/b
    def vjp(out, ct):
        return (
            unbroadcast(div(ct, b), a.shape) if a.requires_grad else None,
            unbroadcast(neg(div(mul(ct, out), b)), b.shape) if b.requires_grad else None,
        )

    with np.errstate(divide="ignore", invalid="ignore"):
        value = a.value / b.value
    return a.graph.record("div", value, (a, b), vjp)


def neg(a: Var) -> Var:
    def vjp(out, ct):
        return (neg(ct),)

    return a.graph.record("neg", -a.value, (a,), vjp)


def matmul(a: Any, b: Any) -> Var:
    a, b = _pair(a, b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: cannot multiply {a.shape} by {b.shape}")

    def vjp(out, ct):
        return (
            matmul(ct, transpose(b)) if a.requires_grad else None,
            matmul(transpose(a), ct) if b.requires_grad else None,
        )

    return a.graph.record("matmul", a.value @ b.value, (a, b), vjp)


def dot(a: Any, b: Any) -> Var:
    a, b = _pair(a, b)
    if a.ndim != 1 or b.shape != a.shape:
        raise DimensionError(f"dot: expected two equal-length vectors, got {a.shape} and {b.shape}")

    def vjp(out, ct):
        return (
            mul(ct, b) if a.requires_grad else None,
            mul(ct, a) if b.requires_grad else None,
        )

    return a.graph.record("dot", np.dot(a.value, b.value), (a, b), vjp)


def transpose(a: Var) -> Var:
    def vjp(out, ct):
        return (transpose(ct),)

    return a.graph.record("transpose", a.value.T, (a,), vjp)


def reshape(a: Var, shape: Tuple[int, ...]) -> Var:
    shape = tuple(shape)
    if len(shape) > 2:
        raise RankError(f"reshape: rank {len(shape)} not supported")
    source = a.shape

    def vjp(out, ct):
        return (reshape(ct, source),)

    try:
        value = a.value.reshape(shape)
    except ValueError as exc:
        raise DimensionError(f"reshape: cannot view {source} as {shape}") from exc
    return a.graph.record("reshape", value, (a,), vjp)


def broadcast_to(a: Var, shape: Tuple[int, ...]) -> Var:
    shape = tuple(shape)

    def vjp(out, ct):
        return (unbroadcast(ct, a.shape),)

    try:
        value = np.broadcast_to(a.value, shape)
    except ValueError as exc:
        raise DimensionError(f"broadcast_to: cannot broadcast {a.shape} to {shape}") from exc
    return a.graph.record("broadcast_to", value, (a,), vjp)


def sum(a: Var, axis: Optional[int] = None) -> Var:
    def vjp(out, ct):
        return (broadcast_to(reshape(ct, _keepdims_shape(a.shape, axis)), a.shape),)

    return a.graph.record("sum", np.sum(a.value, axis=axis), (a,), vjp)


def mean(a: Var, axis: Optional[int] = None) -> Var:
    count = a.size if axis is None else a.shape[axis]
    return mul(sum(a, axis), 1.0 / count)


def square(a: Var) -> Var:
    def vjp(out, ct):
        return (mul(ct, mul(2.0, a)),)

    return a.graph.record("square", a.value * a.value, (a,), vjp)


def tanh(a: Var) -> Var:
    def vjp(out, ct):
        return (mul(ct, sub(1.0, square(out))),)

    return a.graph.record("tanh", np.tanh(a.value), (a,), vjp)


def exp(a: Var) -> Var:
    def vjp(out, ct):
        return (mul(ct, out),)

    with np.errstate(over="ignore"):
        value = np.exp(a.value)
    return a.graph.record("exp", value, (a,), vjp)


def log(a: Var) -> Var:
    def vjp(out, ct):
        return (div(ct, a),)

    with np.errstate(divide="ignore", invalid="ignore"):
        value = np.log(a.value)
    return a.graph.record("log", value, (a,), vjp)


def softplus(a: Var) -> Var:
    # d/dx softplus(x) = sigmoid(x) = exp(x - softplus(x))
    def vjp(out, ct):
        return (mul(ct, exp(sub(a, out))),)

    return a.graph.record("softplus", np.logaddexp(0.0, a.value), (a,), vjp)


def relu(a: Var) -> Var:
    # second derivative is zero everywhere, including the kink
    mask = (a.value > 0.0).astype(np.float64)

    def vjp(out, ct):
        return (mul(ct, mask),)

    return a.graph.record("relu", a.value * mask, (a,), vjp)


def getitem(a: Var, index: Any) -> Var:
    shape = a.shape

    def vjp(out, ct):
        return (scatter(ct, index, shape),)

    return a.graph.record("getitem", a.value[index], (a,), vjp)


def scatter(a: Var, index: Any, shape: Tuple[int, ...]) -> Var:
    """Zeros of ``shape`` with ``a`` written at ``index`` (adjoint of ``getitem``)."""
    value = np.zeros(shape)
    value[index] = a.value

    def vjp(out, ct):
        return (getitem(ct, index),)

    return a.graph.record("scatter", value, (a,), vjp)


def stack(items: Sequence[Var], axis: int = 0) -> Var:
    if not items:
        raise DimensionError("stack: nothing to stack")
    graph = items[0].graph
    items = tuple(graph.lift(v) for v in items)
    first = items[0].shape
    for v in items:
        if v.shape != first:
            raise DimensionError(f"stack: shapes {first} and {v.shape} differ")
    if axis not in (0, 1) or len(first) + 1 > 2:
        raise RankError(f"stack: cannot stack {first} along axis {axis}")

    def vjp(out, ct):
        return tuple(
            getitem(ct, (i,) if axis == 0 else (slice(None), i)) if v.requires_grad else None
            for i, v in enumerate(items)
        )

    return graph.record("stack", np.stack([v.value for v in items], axis=axis), items, vjp)


def total(items: Sequence[Var]) -> Var:
    """Sum of a non-empty sequence of same-shaped Vars."""
    return builtins.sum(items[1:], items[0])
