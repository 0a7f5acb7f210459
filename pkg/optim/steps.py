"""
Training steps.

All steps share ``sgd_step`` for the final update:

    g' = g + weight_decay · w
    v  ← momentum · v + g'
    w  ← w − lr · v                  (Nesterov: w ← w − lr · (g' + momentum · v))

Weight decay is coupled and applies to every parameter, biases and the
flatness layer included.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from autodiff import grad
from errors import ConfigError, DimensionError
from flatness import FlatnessConfig, fam_gradient
from model import Batch, ModelState, count_loss_evals, forward_loss
from tensor import RngStream, as_tensor

from .config import FamRegularizer, OptimConfig, SamRegularizer

logger = logging.getLogger(__name__)


@dataclass
class OptimState:
    velocity: List[np.ndarray]
    step_count: int = 0
    epoch_count: int = 0


def init_optim_state(state: ModelState) -> OptimState:
    return OptimState(velocity=[np.zeros(p.shape) for p in state.parameters()])


@dataclass
class StepResult:
    state: ModelState
    opt: OptimState
    loss: float
    kappa: Optional[float] = None
    loss_evals: int = 0
    curvature_evals: int = 0


def sgd_step(
    state: ModelState,
    grads: Sequence[np.ndarray],
    opt: OptimState,
    cfg: OptimConfig,
    lr: float,
) -> Tuple[ModelState, OptimState]:
    """
    Apply one (momentum, weight-decay) SGD update.

    Args:
        state: Current parameters.
        grads: One gradient per parameter, ordered like ``state.parameters()``.
        opt: Velocity buffers; a new ``OptimState`` is returned.
        cfg: Momentum, weight decay and Nesterov flag.
        lr: Learning rate for this step.

    Returns:
        ``(new_state, new_opt)``.
    """
    params = state.parameters()
    if len(grads) != len(params) or len(opt.velocity) != len(params):
        raise DimensionError(
            f"sgd_step: {len(grads)} gradients and {len(opt.velocity)} buffers for {len(params)} parameters"
        )
    new_params, new_velocity = [], []
    for p, g, v in zip(params, grads, opt.velocity):
        g = np.asarray(g, dtype=np.float64)
        if g.shape != p.shape or v.shape != p.shape:
            raise DimensionError(f"sgd_step: gradient {g.shape} / buffer {v.shape} do not match parameter {p.shape}")
        g = g + cfg.weight_decay * p
        v = cfg.momentum * v + g
        update = g + cfg.momentum * v if cfg.nesterov else v
        new_params.append(as_tensor(p - lr * update, op="sgd_step"))
        new_velocity.append(v)
    new_opt = OptimState(velocity=new_velocity, step_count=opt.step_count + 1, epoch_count=opt.epoch_count)
    return state.with_parameters(new_params), new_opt


def global_norm(arrays: Sequence[np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.vdot(a, a)) for a in arrays)))


def sam_perturbation(grads: Sequence[np.ndarray], rho: float) -> Optional[List[np.ndarray]]:
    """``ρ g / ‖g‖₂`` over all parameters jointly; None when the gradient is zero."""
    norm = global_norm(grads)
    if norm == 0.0:
        return None
    return [rho * np.asarray(g) / norm for g in grads]


def plain_step(state: ModelState, batch: Batch, opt: OptimState, cfg: OptimConfig, lr: float) -> StepResult:
    with count_loss_evals() as counter:
        forward = forward_loss(state, batch)
        grads = grad(forward.loss, forward.params.all())
    new_state, new_opt = sgd_step(state, grads, opt, cfg, lr)
    return StepResult(new_state, new_opt, forward.loss.item(), loss_evals=counter.count)


def sam_step(state: ModelState, batch: Batch, opt: OptimState, cfg: OptimConfig, lr: float) -> StepResult:
    """
    Sharpness-aware step: ascend to ``w + ρ g/‖g‖``, take the gradient
    there, and descend from the original ``w`` with it. Momentum buffers see
    only the final gradient.
    """
    regularizer = cfg.regularizer
    if not isinstance(regularizer, SamRegularizer):
        raise ConfigError("sam_step needs a sam regularizer", field="regularizer.kind")
    with count_loss_evals() as counter:
        forward = forward_loss(state, batch)
        g1 = grad(forward.loss, forward.params.all())
        eps = sam_perturbation(g1, regularizer.rho)
        if eps is None:
            logger.warning("zero gradient at step %d; skipping the SAM ascent", opt.step_count)
            g = g1
        else:
            perturbed = state.with_parameters([p + e for p, e in zip(state.parameters(), eps)])
            ascent = forward_loss(perturbed, batch)
            g = grad(ascent.loss, ascent.params.all())
    new_state, new_opt = sgd_step(state, g, opt, cfg, lr)
    return StepResult(new_state, new_opt, forward.loss.item(), loss_evals=counter.count)


def fam_step(
    state: ModelState,
    batch: Batch,
    opt: OptimState,
    cfg: OptimConfig,
    lr: float,
    rng: Optional[RngStream] = None,
    *,
    full_batch: Optional[Batch] = None,
) -> StepResult:
    """One SGD update along ``∇(loss + λ κ)``; the step's κ is reported with it."""
    regularizer = cfg.regularizer
    if not isinstance(regularizer, FamRegularizer):
        raise ConfigError("fam_step needs a fam regularizer", field="regularizer.kind")
    flat: FlatnessConfig = regularizer.flatness
    with count_loss_evals() as counter:
        result = fam_gradient(state, batch, flat, rng, full_batch=full_batch)
    new_state, new_opt = sgd_step(state, result.grads, opt, cfg, lr)
    return StepResult(
        new_state,
        new_opt,
        result.loss,
        kappa=result.kappa,
        loss_evals=counter.count,
        curvature_evals=counter.curvature,
    )


def train_step(
    state: ModelState,
    batch: Batch,
    opt: OptimState,
    cfg: OptimConfig,
    lr: float,
    rng: Optional[RngStream] = None,
    *,
    full_batch: Optional[Batch] = None,
) -> StepResult:
    kind = cfg.regularizer.kind
    if kind == "fam":
        return fam_step(state, batch, opt, cfg, lr, rng, full_batch=full_batch)
    if kind == "sam":
        return sam_step(state, batch, opt, cfg, lr)
    return plain_step(state, batch, opt, cfg, lr)
