# SGD, SAM and flatness-regularized steps plus learning-rate schedules
from .config import (
    ConstantSchedule,
    CosineSchedule,
    FamRegularizer,
    MultistepSchedule,
    NoRegularizer,
    OptimConfig,
    Regularizer,
    SamRegularizer,
    Schedule,
)
from .schedules import lr_at
from .steps import (
    OptimState,
    StepResult,
    fam_step,
    global_norm,
    init_optim_state,
    plain_step,
    sam_perturbation,
    sam_step,
    sgd_step,
    train_step,
)

__all__ = [
    "ConstantSchedule",
    "CosineSchedule",
    "FamRegularizer",
    "MultistepSchedule",
    "NoRegularizer",
    "OptimConfig",
    "Regularizer",
    "SamRegularizer",
    "Schedule",
    "lr_at",
    "OptimState",
    "StepResult",
    "fam_step",
    "global_norm",
    "init_optim_state",
    "plain_step",
    "sam_perturbation",
    "sam_step",
    "sgd_step",
    "train_step",
]
