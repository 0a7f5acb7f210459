# Dense float64 tensors and seeded random streams
from .kernels import Tensor, as_tensor, check_finite, matmul, frobenius_norm_sq
from .rng import RngStream, Stream, rademacher

__all__ = [
    "Tensor",
    "as_tensor",
    "check_finite",
    "matmul",
    "frobenius_norm_sq",
    "RngStream",
    "Stream",
    "rademacher",
]
