"""
The flatness-regularized objective ``loss + λ κ(w_ℓ)`` and its gradient.

The gradient is produced by differentiating the recorded objective. Since κ
already holds second derivatives of the loss, this reaches third
derivatives for every layer without forming them.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from autodiff import Var, grad, ops
from model import Batch, ForwardPass, ModelState, forward_loss
from tensor import RngStream

from .config import FlatnessConfig
from .measures import kappa_var, measure_kappa

logger = logging.getLogger(__name__)


def _regularized(
    forward: ForwardPass,
    cfg: FlatnessConfig,
    rng: Optional[RngStream],
    kappa_loss: Optional[Var],
) -> Tuple[Var, Var]:
    source = kappa_loss if kappa_loss is not None else forward.loss
    kappa = kappa_var(source, forward.flatness_weight, cfg, rng)
    # an estimate can dip below zero; only its positive part is penalized
    penalty = ops.relu(kappa) if cfg.clamps else kappa
    return forward.loss + penalty * cfg.lam, kappa


def fam_objective(
    forward: ForwardPass,
    cfg: FlatnessConfig,
    rng: Optional[RngStream] = None,
    *,
    kappa_loss: Optional[Var] = None,
) -> Var:
    """
    Regularized objective as a differentiable scalar.

    Args:
        forward: Forward pass providing the loss and the flatness layer.
        cfg: Flatness settings; ``cfg.lam == 0`` returns ``forward.loss``
            itself.
        rng: Probe stream for the Hutchinson mode.
        kappa_loss: Loss the Hessian is taken of when it differs from the
            training loss (full-set Hessians); must share ``forward``'s
            parameters.

    Returns:
        ``loss + λ κ``.
    """
    if cfg.lam == 0.0:
        return forward.loss
    objective, _ = _regularized(forward, cfg, rng, kappa_loss)
    return objective


@dataclass
class FamGradient:
    grads: List[np.ndarray]
    loss: float
    kappa: Optional[float]
    n_weights: int

    @property
    def weights(self) -> List[np.ndarray]:
        return self.grads[: self.n_weights]

    @property
    def biases(self) -> List[np.ndarray]:
        return self.grads[self.n_weights:]


def _same_batch(a: Batch, b: Batch) -> bool:
    if a is b:
        return True
    return all(x is y or (x.shape == y.shape and np.array_equal(x, y)) for x, y in zip(a, b))


def _curvature_loss(
    forward: ForwardPass,
    state: ModelState,
    batch: Batch,
    cfg: FlatnessConfig,
    full_batch: Optional[Batch],
) -> Optional[Var]:
    """Loss the Hessian is taken of when it is not the primal loss itself."""
    if cfg.hessian_batch != "full-set" or full_batch is None or _same_batch(batch, full_batch):
        return None
    return forward_loss(state, full_batch, params=forward.params, curvature=True).loss


def fam_gradient(
    state: ModelState,
    batch: Batch,
    cfg: FlatnessConfig,
    rng: Optional[RngStream] = None,
    *,
    full_batch: Optional[Batch] = None,
    measure: bool = True,
) -> FamGradient:
    """
    Gradient of ``loss + λ κ`` wrt every parameter (weights, then biases).

    With ``cfg.hessian_batch == "full-set"`` and ``full_batch`` given, κ is
    taken over ``full_batch`` while the loss term stays on ``batch``. The
    primal forward is reused when the two batches coincide; otherwise the
    full-set pass counts as a curvature evaluation. At λ = 0 the gradient
    is the plain loss gradient and κ is only measured (when ``measure`` is
    set) for reporting.
    """
    forward = forward_loss(state, batch)
    params = forward.params.all()
    kappa_loss = _curvature_loss(forward, state, batch, cfg, full_batch)

    if cfg.lam == 0.0:
        grads = grad(forward.loss, params)
        kappa = None
        if measure:
            source = kappa_loss if kappa_loss is not None else forward.loss
            kappa = measure_kappa(source, forward.flatness_weight, cfg, rng).kappa
        return FamGradient(grads=grads, loss=forward.loss.item(), kappa=kappa, n_weights=state.spec.n_layers)

    objective, kappa = _regularized(forward, cfg, rng, kappa_loss)
    grads = grad(objective, params)
    return FamGradient(grads=grads, loss=forward.loss.item(), kappa=kappa.item(), n_weights=state.spec.n_layers)
