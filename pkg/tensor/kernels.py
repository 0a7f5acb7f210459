"""
Tensor values and the handful of kernels that need contract checks.

A Tensor is a plain ``numpy.ndarray`` of dtype float64 with rank <= 2 and
only finite entries. Arrays produced through ``as_tensor`` are read-only so
they can be shared across threads without copying.
"""

from typing import Any

import numpy as np

from errors import DimensionError, NonFiniteError, RankError

Tensor = np.ndarray

MAX_RANK = 2


def check_finite(values: np.ndarray, op: str) -> np.ndarray:
    """Raise ``NonFiniteError`` naming ``op`` if ``values`` holds NaN or Inf."""
    if not np.all(np.isfinite(values)):
        raise NonFiniteError(op)
    return values


def as_tensor(data: Any, *, op: str = "as_tensor") -> Tensor:
    """
    Convert ``data`` into a validated, read-only float64 tensor.

    Args:
        data: Anything ``numpy.asarray`` accepts.
        op: Name reported if validation fails.

    Returns:
        A read-only float64 array of rank <= 2.
    """
    arr = np.array(data, dtype=np.float64)
    if arr.ndim > MAX_RANK:
        raise RankError(f"{op}: rank {arr.ndim} exceeds {MAX_RANK} (shape {arr.shape})")
    check_finite(arr, op)
    arr.flags.writeable = False
    return arr


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product of a (p×q) and b (q×r)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    return as_tensor(a @ b, op="matmul")


def frobenius_norm_sq(a: Tensor) -> float:
    """Sum of squared entries."""
    flat = np.asarray(a, dtype=np.float64).ravel()
    return float(np.dot(flat, flat))
