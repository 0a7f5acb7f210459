"""
Reference computations for checking the flatness gradient.

``closed_form_kappa_terms`` assembles the gradient of κ from its closed form: the
product-rule part through the Gram matrix (term I, layer ℓ only) plus the
derivative of the block traces with the Gram matrix held fixed (term II,
every parameter). Term II needs third derivatives, which are taken here as
central differences of dense layer Hessians, so it is only usable on tiny
models. ``kappa_parts_autodiff`` splits the nested-autodiff gradient the
same way so the two can be compared part by part.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from autodiff import Graph, HessianOperator, Var, check_dense_cap, grad, layer_hessian, ops
from model import Batch, ModelState, ParamVars, forward_loss

from .measures import block_traces, block_traces_var

logger = logging.getLogger(__name__)

ORACLE_CAP = 512

LossBuilder = Callable[[Graph, List[Var]], Var]
ScalarFn = Callable[[List[np.ndarray]], float]


def relative_error(approx, reference, floor: float = 1e-8) -> float:
    """``max|approx - reference| / max(max|reference|, floor)``."""
    approx = np.asarray(approx, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    scale = max(float(np.max(np.abs(reference), initial=0.0)), floor)
    return float(np.max(np.abs(approx - reference), initial=0.0)) / scale


def worst_relative_error(
    approx: Sequence[np.ndarray], reference: Sequence[np.ndarray], floor: float = 1e-8
) -> Tuple[float, Tuple[int, Tuple[int, ...]]]:
    """
    Relative error over a list of arrays, scaled by the largest reference entry.

    Returns:
        ``(error, (layer, index))`` where ``layer`` is 1-based and ``index``
        locates the largest absolute deviation.
    """
    scale = max(max((float(np.max(np.abs(r), initial=0.0)) for r in reference), default=0.0), floor)
    worst, where = 0.0, (1, ())
    for k, (a, r) in enumerate(zip(approx, reference), start=1):
        diff = np.abs(np.asarray(a, dtype=np.float64) - np.asarray(r, dtype=np.float64))
        if diff.size == 0:
            continue
        flat = int(np.argmax(diff))
        if diff.flat[flat] / scale > worst:
            worst = float(diff.flat[flat]) / scale
            where = (k, tuple(int(i) for i in np.unravel_index(flat, diff.shape)))
    return worst, where


def central_difference_gradient(f: ScalarFn, arrays: Sequence[np.ndarray], h: float = 1e-5) -> List[np.ndarray]:
    """Gradient of ``f`` wrt every entry of every array, by central differences."""
    base = [np.array(a, dtype=np.float64) for a in arrays]
    out = []
    for k, a in enumerate(base):
        g = np.empty(a.shape)
        for idx in np.ndindex(a.shape):
            saved = a[idx]
            a[idx] = saved + h
            up = f(base)
            a[idx] = saved - h
            down = f(base)
            a[idx] = saved
            g[idx] = (up - down) / (2.0 * h)
        out.append(g)
    return out


def finite_difference_hessian(f: ScalarFn, arrays: Sequence[np.ndarray], index: int, h: float = 1e-4) -> np.ndarray:
    """
    Dense Hessian of ``f`` wrt the flattened ``arrays[index]``.

    Uses the four-point central formula on every pair of entries; the result
    is symmetrized.
    """
    base = [np.array(a, dtype=np.float64) for a in arrays]
    a = base[index]
    flat = a.reshape(-1)
    n = flat.size
    hessian = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            values = []
            for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                saved_i, saved_j = flat[i], flat[j]
                flat[i] += si * h
                flat[j] += sj * h
                values.append(f(base))
                flat[i], flat[j] = saved_i, saved_j
            hessian[i, j] = hessian[j, i] = (values[0] - values[1] - values[2] + values[3]) / (4.0 * h * h)
    return hessian


def _bind(arrays: Sequence[np.ndarray]) -> Tuple[Graph, List[Var]]:
    graph = Graph()
    return graph, [graph.leaf(a, name=f"p{k}") for k, a in enumerate(arrays, start=1)]


def scalar_fn(loss_fn: LossBuilder) -> ScalarFn:
    """Wrap a loss builder as a plain function of arrays."""

    def f(arrays: List[np.ndarray]) -> float:
        graph, leaves = _bind(arrays)
        with graph.no_record():
            return loss_fn(graph, leaves).item()

    return f


def _layer_block_traces(loss_fn: LossBuilder, arrays: Sequence[np.ndarray], layer: int, cap: int) -> np.ndarray:
    graph, leaves = _bind(arrays)
    w_l = leaves[layer - 1]
    d, m = w_l.shape
    return block_traces(layer_hessian(loss_fn(graph, leaves), w_l, cap), d, m)


@dataclass
class KappaGradientParts:
    """Gradient of κ split into its product-rule parts, one array per parameter."""

    term1: np.ndarray
    term2: List[np.ndarray]
    layer: int

    def total(self) -> List[np.ndarray]:
        out = [np.array(t) for t in self.term2]
        out[self.layer - 1] = out[self.layer - 1] + self.term1
        return out


def closed_form_kappa_terms(
    loss_fn: LossBuilder,
    arrays: Sequence[np.ndarray],
    layer: int,
    h: float = 1e-4,
    cap: int = ORACLE_CAP,
) -> KappaGradientParts:
    """
    Closed-form gradient of the neuronwise κ.

    Args:
        loss_fn: Builds the scalar loss from leaves bound to ``arrays``.
        arrays: Parameter values; every one must have at most ``cap``
            entries.
        layer: 1-based position of the flatness layer in ``arrays``.
        h: Step of the central differences of the block traces.
        cap: Parameter cap per array.

    Returns:
        Term I ``2 P w`` (P the block-trace matrix) for the layer, and term
        II, the derivative of ``Σ G∘P`` with the Gram matrix G frozen, for
        every array.
    """
    arrays = [np.array(a, dtype=np.float64) for a in arrays]
    for k, a in enumerate(arrays, start=1):
        check_dense_cap(a.size, cap, what=f"parameter {k}")
    w = arrays[layer - 1]
    traces = _layer_block_traces(loss_fn, arrays, layer, cap)
    term1 = 2.0 * traces @ w
    gram = w @ w.T

    def frozen_gram_kappa(values: List[np.ndarray]) -> float:
        return float(np.sum(gram * _layer_block_traces(loss_fn, values, layer, cap)))

    term2 = central_difference_gradient(frozen_gram_kappa, arrays, h)
    logger.debug("term I norm %.3e, term II arrays %d", np.linalg.norm(term1), len(term2))
    return KappaGradientParts(term1=term1, term2=term2, layer=layer)


def kappa_parts_autodiff(loss_fn: LossBuilder, arrays: Sequence[np.ndarray], layer: int) -> KappaGradientParts:
    """Nested-autodiff gradient of the neuronwise κ, split like ``closed_form_kappa_terms``."""
    graph, leaves = _bind(arrays)
    w_l = leaves[layer - 1]
    traces = block_traces_var(HessianOperator(loss_fn(graph, leaves), w_l))
    frozen = ops.sum(ops.stop_gradient(w_l @ w_l.T) * traces)
    term2 = grad(frozen, leaves)
    term1 = 2.0 * traces.value @ w_l.value
    return KappaGradientParts(term1=term1, term2=list(term2), layer=layer)


def mlp_loss_builder(state: ModelState, batch: Batch) -> LossBuilder:
    """Loss builder over ``state.parameters()`` (weights, then enabled biases)."""
    n = state.spec.n_layers

    def build(graph: Graph, leaves: List[Var]) -> Var:
        biases: List[Optional[Var]] = []
        if state.biases is not None:
            rest = iter(leaves[n:])
            biases = [next(rest) if b is not None else None for b in state.biases]
        params = ParamVars(graph=graph, weights=list(leaves[:n]), biases=biases)
        return forward_loss(state, batch, params=params).loss

    return build


def closed_form_kappa_oracle(state: ModelState, batch: Batch, h: float = 1e-4, cap: int = ORACLE_CAP) -> List[np.ndarray]:
    """
    Closed-form ``∇κ`` of an MLP, one array per parameter.

    Raises:
        CapacityError: Some parameter array exceeds ``cap`` entries.
    """
    return closed_form_kappa_terms(mlp_loss_builder(state, batch), state.parameters(), state.spec.layer, h, cap).total()


lemma1_oracle = closed_form_kappa_oracle
