"""
Batch-mean losses on graph values.

Both reduce with a plain mean over examples, matching the empirical risk.
"""

import numpy as np

from autodiff import Var, ops
from errors import DimensionError


def cross_entropy(logits: Var, labels) -> Var:
    """
    Mean softmax cross-entropy.

    Args:
        logits: (B×C) Var.
        labels: Length-B integer class indices in [0, C).

    Returns:
        Scalar Var.
    """
    labels = np.asarray(labels)
    batch, classes = logits.shape
    if labels.shape != (batch,):
        raise DimensionError(f"cross_entropy: labels shape {labels.shape} does not match logits {logits.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= classes):
        raise DimensionError(f"cross_entropy: labels must lie in [0, {classes})")
    onehot = np.zeros((batch, classes))
    onehot[np.arange(batch), labels.astype(np.int64)] = 1.0

    # log-sum-exp with a constant shift; the shift cancels in every derivative
    shift = np.max(logits.value, axis=1)
    shifted = logits - shift[:, None]
    log_norm = ops.log(ops.sum(ops.exp(shifted), axis=1)) + shift
    picked = ops.sum(logits * onehot, axis=1)
    return ops.mean(log_norm - picked)


def mse(outputs: Var, targets) -> Var:
    """Mean squared error, averaged over outputs and examples."""
    targets = np.asarray(targets, dtype=np.float64)
    if targets.size != outputs.size:
        raise DimensionError(f"mse: targets shape {targets.shape} does not match outputs {outputs.shape}")
    residual = outputs - targets.reshape(outputs.shape)
    return ops.mean(ops.square(residual))


LOSSES = {
    "cross_entropy": cross_entropy,
    "mse": mse,
}
