"""
Flatness measures of one weight layer.

For a layer ``w`` of shape (d×m) the neuronwise measure is

    κ(w) = Σ_{s,s'} ⟨w_s, w_s'⟩ · Tr(H_{s,s'})

where ``H_{s,s'}`` is the m×m block of second derivatives wrt rows ``s``
and ``s'``. The trace measure replaces it with ``‖w‖²_F · Tr(H)``.

Every function here has a numpy flavour returning a ``KappaReport`` and a
graph flavour (``*_var``) whose result can be differentiated again.
"""

import logging
import time
from typing import List, Optional

import numpy as np

from autodiff import HessianOperator, Var, check_dense_cap, layer_hessian, ops
from errors import ConfigError
from tensor import RngStream, frobenius_norm_sq

from .config import FlatnessConfig, KappaReport
from .hutchinson import hessian_trace_estimate, hessian_trace_estimate_var

logger = logging.getLogger(__name__)


def block_traces(hessian: np.ndarray, d: int, m: int) -> np.ndarray:
    """d×d matrix of ``Tr(H_{s,s'})`` from a dense (d·m)×(d·m) layer Hessian."""
    return np.einsum("atbt->ab", hessian.reshape(d, m, d, m))


def _elapsed_ms(started: float) -> float:
    return (time.perf_counter() - started) * 1000.0


def kappa_neuronwise(loss: Var, w_l: Var, cap: Optional[int] = None) -> KappaReport:
    """
    Neuronwise relative flatness from the dense layer Hessian.

    Args:
        loss: Scalar loss recorded on ``w_l``'s graph.
        w_l: The (d×m) layer.
        cap: Dense-Hessian parameter cap; ``layer_hessian``'s default if None.

    Returns:
        KappaReport carrying the Gram matrix and the pair traces.
    """
    started = time.perf_counter()
    d, m = w_l.shape
    hessian = layer_hessian(loss, w_l) if cap is None else layer_hessian(loss, w_l, cap)
    pair_traces = block_traces(hessian, d, m)
    w = w_l.value
    gram = w @ w.T
    kappa = float(np.sum(gram * pair_traces))
    return KappaReport(
        kappa=kappa,
        trace_total=float(np.trace(hessian)),
        mode="neuronwise",
        wall_time_ms=_elapsed_ms(started),
        gram=gram,
        pair_traces=pair_traces,
    )


def exact_trace(operator: HessianOperator) -> float:
    """Sum of the Hessian diagonal, one column at a time."""
    return float(sum(np.ravel(operator.column(i))[i] for i in range(operator.size)))


def kappa_trace(loss: Var, w_l: Var, cfg: FlatnessConfig, rng: Optional[RngStream] = None) -> KappaReport:
    """
    Trace measure ``‖w‖²_F · Tr(H)``, exact or Hutchinson.

    The Hutchinson path draws ``cfg.samples`` Rademacher probes from ``rng``
    (a fresh stream ``cfg.stream`` with seed 0 when omitted) and never forms H.
    """
    if cfg.samples < 1:
        raise ConfigError(f"must be >= 1, got {cfg.samples}", field="samples")
    if cfg.mode not in ("trace-exact", "trace-hutchinson"):
        raise ConfigError(f"kappa_trace needs a trace mode, got {cfg.mode!r}", field="mode")
    started = time.perf_counter()
    operator = HessianOperator(loss, w_l)
    if cfg.mode == "trace-exact":
        check_dense_cap(w_l.size, cfg.dense_cap)
        trace = exact_trace(operator)
    else:
        rng = rng if rng is not None else RngStream(0, cfg.stream)
        trace = hessian_trace_estimate(operator, cfg.samples, rng)
    kappa = frobenius_norm_sq(w_l.value) * trace
    return KappaReport(kappa=kappa, trace_total=trace, mode=cfg.mode, wall_time_ms=_elapsed_ms(started))


def measure_kappa(loss: Var, w_l: Var, cfg: FlatnessConfig, rng: Optional[RngStream] = None) -> KappaReport:
    """Dispatch on ``cfg.mode``."""
    if cfg.mode == "neuronwise":
        return kappa_neuronwise(loss, w_l, cfg.dense_cap)
    return kappa_trace(loss, w_l, cfg, rng)


def block_traces_var(operator: HessianOperator) -> Var:
    """
    Differentiable d×d matrix of block traces.

    Column ``s'`` is ``Σ_t H[:, (s', t)]`` restricted to the matching entry
    ``t`` of every row, gathered from the d·m recorded Hessian columns.
    """
    d, m = operator.shape
    columns: List[Var] = []
    for s_prime in range(d):
        parts = [
            operator.column(s_prime * m + t, create_graph=True)[:, t]
            for t in range(m)
        ]
        columns.append(ops.total(parts))
    return ops.stack(columns, axis=1)


def exact_trace_var(operator: HessianOperator) -> Var:
    d, m = operator.shape
    return ops.total(
        [operator.column(i, create_graph=True)[divmod(i, m)] for i in range(d * m)]
    )


def kappa_var(loss: Var, w_l: Var, cfg: FlatnessConfig, rng: Optional[RngStream] = None) -> Var:
    """
    κ as a graph value, ready for one more derivative.

    Args:
        loss: Unregularized loss the Hessian is taken of.
        w_l: Flatness layer.
        cfg: Mode, probe count and dense cap.
        rng: Probe stream for the Hutchinson mode.

    Returns:
        Scalar Var at generation 2.
    """
    if cfg.is_dense:
        check_dense_cap(w_l.size, cfg.dense_cap)
    operator = HessianOperator(loss, w_l)
    if cfg.mode == "neuronwise":
        gram = w_l @ w_l.T
        return ops.sum(gram * block_traces_var(operator))
    norm_sq = ops.sum(ops.square(w_l))
    if cfg.mode == "trace-exact":
        return norm_sq * exact_trace_var(operator)
    if cfg.samples < 1:
        raise ConfigError(f"must be >= 1, got {cfg.samples}", field="samples")
    rng = rng if rng is not None else RngStream(0, cfg.stream)
    return norm_sq * hessian_trace_estimate_var(operator, cfg.samples, rng)
