"""
Counter-based random streams.

Every consumer (initialization, shuffling, Hutchinson probes, ...) owns its
own ``RngStream``. A stream is keyed by ``(seed, stream_id)`` on numpy's
Philox generator, and each draw uses its own counter block, so the values of
draw ``k`` depend only on ``(seed, stream_id, k)`` and never on what other
streams did or on thread scheduling.
"""

from enum import IntEnum
from typing import Optional, Tuple, Union

import numpy as np

from errors import EmptyDimensionError

from .kernels import Tensor

_MASK64 = (1 << 64) - 1

Shape = Union[int, Tuple[int, ...]]


class Stream(IntEnum):
    INIT = 1
    SHUFFLE = 2
    HUTCHINSON = 3
    DATA = 4
    SPLIT = 5
    LABEL_NOISE = 6
    KAPPA_EVAL = 7


class RngStream:
    """Single-owner random stream; use ``fork`` to hand a stream to someone else."""

    def __init__(self, seed: int, stream_id: int = 0, draw_index: int = 0):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        self.draw_index = int(draw_index)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}, draw_index={self.draw_index})"

    def at(self, draw_index: int) -> np.random.Generator:
        """Generator for a specific draw index; does not advance the stream."""
        key = (self.stream_id << 64) | self.seed
        counter = np.array([0, draw_index, 0, 0], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key, counter=counter))

    def next_generator(self) -> np.random.Generator:
        gen = self.at(self.draw_index)
        self.draw_index += 1
        return gen

    def fork(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id)

    def rademacher(self, shape: Shape) -> Tensor:
        size = int(np.prod(shape))
        if size == 0:
            raise EmptyDimensionError(f"rademacher: empty shape {shape}")
        bits = self.next_generator().integers(0, 2, size=shape, dtype=np.int8)
        return (2.0 * bits - 1.0).astype(np.float64)

    def normal(self, shape: Shape, scale: float = 1.0) -> Tensor:
        return self.next_generator().normal(0.0, scale, size=shape)

    def uniform(self, shape: Shape, low: float = 0.0, high: float = 1.0) -> Tensor:
        return self.next_generator().uniform(low, high, size=shape)

    def integers(self, low: int, high: int, shape: Shape) -> np.ndarray:
        return self.next_generator().integers(low, high, size=shape)

    def permutation(self, n: int, draw_index: Optional[int] = None) -> np.ndarray:
        gen = self.next_generator() if draw_index is None else self.at(draw_index)
        return gen.permutation(n)


def rademacher(rng: RngStream, n: int) -> Tensor:
    """
    Draw ``n`` independent ±1 entries, each with probability 1/2.

    Args:
        rng: Stream to draw from; advances by one draw.
        n: Number of entries (>= 1).

    Returns:
        Float64 vector of length ``n``.
    """
    if n < 1:
        raise EmptyDimensionError(f"rademacher: n must be >= 1, got {n}")
    return rng.rademacher(n)
