"""
Exception hierarchy shared by every relflat package.

Each error also derives from the closest builtin so callers may catch
either the specific class or e.g. ``ValueError``.
"""

from typing import Optional, Tuple


class RelflatError(Exception):
    """Base class for all relflat errors."""


class DimensionError(RelflatError, ValueError):
    """Operand shapes do not agree."""


class EmptyDimensionError(DimensionError):
    """A zero-length dimension was requested."""


class RankError(DimensionError):
    """Tensor rank outside what an operation supports."""


class NonFiniteError(RelflatError, ArithmeticError):
    """A kernel or primitive produced NaN or Inf."""

    def __init__(self, op: str):
        super().__init__(f"non-finite value produced by '{op}'")
        self.op = op


class GraphError(RelflatError, ValueError):
    """Misuse of the computation graph (foreign Vars, invalid targets)."""


class DepthError(RelflatError, RuntimeError):
    """Differentiation nested deeper than the supported three levels."""


class CapacityError(RelflatError, RuntimeError):
    """A dense computation would exceed its configured parameter cap."""


class ConfigError(RelflatError, ValueError):
    """Invalid configuration; ``field`` carries the dotted path when known."""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


class FormatError(RelflatError, ValueError):
    """Malformed input file."""


class ConsistencyError(RelflatError, ValueError):
    """Companion inputs disagree with each other."""


class ShapeChainError(RelflatError, ValueError):
    """Layer widths and weight shapes do not chain."""


class RangeError(RelflatError, ValueError):
    """Argument outside its admissible range."""


class TrainingDivergedError(RelflatError, ArithmeticError):
    """Loss became non-finite, or blew up past the divergence threshold, during training."""

    def __init__(self, step: int, cause: Optional[BaseException] = None, reason: str = "non-finite loss"):
        super().__init__(f"{reason} at step {step}" + (f" ({cause})" if cause else ""))
        self.step = step
        self.reason = reason


class GradcheckFailure(RelflatError, AssertionError):
    """A gradient check exceeded its tolerance."""

    def __init__(self, section: str, worst: Tuple[int, Tuple[int, ...]], error: float, tolerance: float):
        layer, index = worst
        super().__init__(
            f"{section}: max relative error {error:.3e} > {tolerance:.1e} "
            f"at layer {layer}, index {index}"
        )
        self.section = section
        self.worst = worst
        self.error = error
        self.tolerance = tolerance
