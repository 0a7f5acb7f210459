# Reverse-mode autodiff with recorded (nestable) reverse passes
from .tape import Graph, Var, Node, MAX_GENERATION
from . import ops
from .backward import grad
from .hessian import HessianOperator, hvp, layer_hessian, check_dense_cap, DEFAULT_DENSE_CAP

__all__ = [
    "Graph",
    "Var",
    "Node",
    "MAX_GENERATION",
    "ops",
    "grad",
    "HessianOperator",
    "hvp",
    "layer_hessian",
    "check_dense_cap",
    "DEFAULT_DENSE_CAP",
]
