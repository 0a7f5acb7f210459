"""Deterministic minibatches."""

from dataclasses import dataclass
from typing import Iterator, List, Tuple

import numpy as np

from errors import ConfigError
from tensor import RngStream, Stream

from .dataset import Dataset


@dataclass(frozen=True)
class BatchPlan:
    """Batch size B, shuffle stream and drop-last flag."""

    batch_size: int
    rng: RngStream
    drop_last: bool = False

    @classmethod
    def seeded(cls, batch_size: int, seed: int, drop_last: bool = False) -> "BatchPlan":
        return cls(batch_size=batch_size, rng=RngStream(seed, Stream.SHUFFLE), drop_last=drop_last)


def epoch_permutation(n: int, plan: BatchPlan, epoch: int) -> np.ndarray:
    """Permutation of ``range(n)`` for ``epoch``; draw ``epoch`` of the shuffle stream."""
    return plan.rng.permutation(n, draw_index=epoch)


def batch_indices(n: int, plan: BatchPlan, epoch: int) -> List[np.ndarray]:
    if plan.batch_size < 1:
        raise ConfigError(f"must be >= 1, got {plan.batch_size}", field="batch.size")
    if plan.batch_size > n:
        raise ConfigError(f"{plan.batch_size} exceeds the {n} training examples", field="batch.size")
    order = epoch_permutation(n, plan, epoch)
    stop = n - n % plan.batch_size if plan.drop_last else n
    return [order[i:i + plan.batch_size] for i in range(0, stop, plan.batch_size)]


def batches(ds: Dataset, plan: BatchPlan, epoch: int) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
    """
    Yield ``(X, Y)`` slices covering a fresh permutation of ``ds``.

    Without drop-last the final batch may be short; together the batches
    cover every index exactly once.
    """
    for idx in batch_indices(len(ds), plan, epoch):
        yield ds.X[idx], ds.Y[idx]
