"""
Counts loss evaluations made inside a ``count_loss_evals`` block.

A primal evaluation is a loss whose value and gradient drive the step. A
curvature evaluation only supplies the loss a Hessian is taken of, e.g. the
full training set under ``hessian_batch="full-set"``.
"""

import contextlib
from contextvars import ContextVar
from dataclasses import dataclass
from typing import Iterator, Optional


@dataclass
class LossEvalCounter:
    count: int = 0
    curvature: int = 0


_active: ContextVar[Optional[LossEvalCounter]] = ContextVar("relflat_loss_evals", default=None)


@contextlib.contextmanager
def count_loss_evals() -> Iterator[LossEvalCounter]:
    counter = LossEvalCounter()
    token = _active.set(counter)
    try:
        yield counter
    finally:
        _active.reset(token)


def record_loss_evaluation(curvature: bool = False) -> None:
    counter = _active.get()
    if counter is None:
        return
    if curvature:
        counter.curvature += 1
    else:
        counter.count += 1
