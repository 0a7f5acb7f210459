# Multilayer perceptrons, losses and checkpoints
from .mlp import (
    Batch,
    Evaluation,
    ForwardPass,
    MlpSpec,
    ModelState,
    ParamVars,
    bind_parameters,
    evaluate,
    forward_loss,
    init_state,
    predict,
)
from .losses import LOSSES, cross_entropy, mse
from .checkpoint import CHECKPOINT_FORMAT, dumps_checkpoint, load_checkpoint, loads_checkpoint, save_checkpoint
from .instrumentation import LossEvalCounter, count_loss_evals, record_loss_evaluation

__all__ = [
    "Batch",
    "Evaluation",
    "ForwardPass",
    "MlpSpec",
    "ModelState",
    "ParamVars",
    "bind_parameters",
    "evaluate",
    "forward_loss",
    "init_state",
    "predict",
    "LOSSES",
    "cross_entropy",
    "mse",
    "CHECKPOINT_FORMAT",
    "dumps_checkpoint",
    "load_checkpoint",
    "loads_checkpoint",
    "save_checkpoint",
    "LossEvalCounter",
    "count_loss_evals",
    "record_loss_evaluation",
]
