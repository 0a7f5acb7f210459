"""Learning-rate schedules as pure functions of the epoch."""

import math

from errors import RangeError

from .config import ConstantSchedule, CosineSchedule, MultistepSchedule, Schedule


def lr_at(schedule: Schedule, t: float, total: float, lr0: float) -> float:
    """
    Learning rate at epoch ``t`` of a ``total``-epoch run.

    Args:
        schedule: Constant, cosine or multistep schedule.
        t: Epoch, possibly fractional, in ``[0, total]``.
        total: Run length T (> 0).
        lr0: Initial rate.

    Returns:
        cosine: ``lr0 (1 + cos(π t / T)) / 2``; multistep: ``lr0 factor^k``
        with k the milestones reached; constant: ``lr0``.
    """
    if total <= 0:
        raise RangeError(f"lr_at: total must be positive, got {total}")
    if t < 0 or t > total:
        raise RangeError(f"lr_at: epoch {t} outside [0, {total}]")
    if isinstance(schedule, ConstantSchedule):
        return lr0
    if isinstance(schedule, CosineSchedule):
        horizon = schedule.total if schedule.total is not None else total
        return lr0 * (1.0 + math.cos(math.pi * min(t, horizon) / horizon)) / 2.0
    if isinstance(schedule, MultistepSchedule):
        passed = sum(1 for m in schedule.milestones if t >= m * total)
        return lr0 * schedule.factor ** passed
    raise RangeError(f"lr_at: unknown schedule {schedule!r}")
