"""
Curvature products on top of ``grad``.

``HessianOperator`` records the first gradient once and then serves any
number of Hessian-vector products against it, either as plain arrays or as
graph values for a further derivative.
"""

import logging
from typing import Union

import numpy as np

from errors import CapacityError, DimensionError

from . import ops
from .backward import grad
from .tape import Var

logger = logging.getLogger(__name__)

DEFAULT_DENSE_CAP = 4096


class HessianOperator:
    """Matvec closure ``v -> H v`` for the Hessian of ``scalar`` wrt ``wrt``."""

    def __init__(self, scalar: Var, wrt: Var):
        self.scalar = scalar
        self.wrt = wrt
        self.gradient = grad(scalar, [wrt], create_graph=True)[0]

    @property
    def shape(self):
        return self.wrt.shape

    @property
    def size(self) -> int:
        return self.wrt.size

    def matvec(self, v, create_graph: bool = False) -> Union[np.ndarray, Var]:
        v = np.asarray(v, dtype=np.float64)
        if v.shape != self.wrt.shape:
            raise DimensionError(f"hvp: vector shape {v.shape} does not match target shape {self.wrt.shape}")
        inner = ops.sum(self.gradient * self.wrt.graph.constant(v))
        return grad(inner, [self.wrt], create_graph=create_graph)[0]

    def basis(self, index: int) -> np.ndarray:
        e = np.zeros(self.size)
        e[index] = 1.0
        return e.reshape(self.shape)

    def column(self, index: int, create_graph: bool = False) -> Union[np.ndarray, Var]:
        return self.matvec(self.basis(index), create_graph=create_graph)

    def quadratic_form(self, v, create_graph: bool = False) -> Union[float, Var]:
        """``vᵀ H v``."""
        hv = self.matvec(v, create_graph=create_graph)
        if create_graph:
            return ops.sum(hv * self.wrt.graph.constant(v))
        return float(np.vdot(hv, v))


def hvp(scalar: Var, wrt: Var, v, create_graph: bool = False) -> Union[np.ndarray, Var]:
    """Hessian of ``scalar`` wrt ``wrt`` applied to ``v`` (same shape as ``wrt``)."""
    return HessianOperator(scalar, wrt).matvec(v, create_graph=create_graph)


def check_dense_cap(size: int, cap: int, what: str = "layer") -> None:
    if size > cap:
        raise CapacityError(
            f"{what} has {size} parameters, above the dense-Hessian cap of {cap}; "
            "use mode 'trace-hutchinson' instead"
        )


def layer_hessian(loss: Var, w_l: Var, cap: int = DEFAULT_DENSE_CAP) -> np.ndarray:
    """
    Dense Hessian of ``loss`` wrt the flattened (row-major) layer ``w_l``.

    Block ``(s, s')`` of size m×m holds the second derivatives wrt rows
    ``s`` and ``s'``.
    """
    check_dense_cap(w_l.size, cap)
    operator = HessianOperator(loss, w_l)
    n = w_l.size
    hessian = np.empty((n, n))
    for i in range(n):
        hessian[:, i] = np.ravel(operator.column(i))
    logger.debug("assembled %dx%d layer Hessian", n, n)
    return hessian
