"""
Hutchinson trace estimation.

``Tr(A) ≈ (1/V) Σ_i v_iᵀ A v_i`` with Rademacher probes ``v_i``. Each probe
takes its own draw from the stream, so estimate ``i`` depends only on the
stream's draw index and not on how many probes run concurrently.
"""

from typing import Callable, List, Tuple, Union

import numpy as np

from autodiff import HessianOperator, Var, ops
from errors import ConfigError
from tensor import RngStream

Matvec = Callable[[np.ndarray], np.ndarray]


def _check_samples(samples: int) -> None:
    if samples < 1:
        raise ConfigError(f"must be >= 1, got {samples}", field="samples")


def hutchinson_samples(matvec: Matvec, shape: Union[int, Tuple[int, ...]], samples: int, rng: RngStream) -> np.ndarray:
    """Per-probe estimates ``vᵀ A v`` for a symmetric operator given as a matvec."""
    _check_samples(samples)
    estimates = np.empty(samples)
    for i in range(samples):
        v = rng.rademacher(shape)
        estimates[i] = float(np.vdot(v, matvec(v)))
    return estimates


def hutchinson_trace(matvec: Matvec, shape: Union[int, Tuple[int, ...]], samples: int, rng: RngStream) -> float:
    """
    Stochastic trace of a symmetric operator.

    Args:
        matvec: ``v -> A v`` on arrays of ``shape``.
        shape: Shape of the operator's input.
        samples: Number of probes V (>= 1).
        rng: Stream the probes are drawn from; advances by ``samples`` draws.

    Returns:
        The mean of the V single-probe estimates.
    """
    return float(np.mean(hutchinson_samples(matvec, shape, samples, rng)))


def hessian_trace_estimate(operator: HessianOperator, samples: int, rng: RngStream) -> float:
    return hutchinson_trace(operator.matvec, operator.shape, samples, rng)


def hessian_trace_estimate_var(operator: HessianOperator, samples: int, rng: RngStream) -> Var:
    """Differentiable Hutchinson estimate of the Hessian trace."""
    _check_samples(samples)
    forms: List[Var] = [
        operator.quadratic_form(rng.rademacher(operator.shape), create_graph=True) for _ in range(samples)
    ]
    return ops.total(forms) * (1.0 / samples)
