"""
Dataset container and the transforms applied before training.

Every transform returns new datasets; inputs are never modified.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Literal, Optional, Sequence, Tuple

import numpy as np

from errors import ConfigError, DimensionError, FormatError
from tensor import RngStream, as_tensor

logger = logging.getLogger(__name__)

Task = Literal["classification", "regression"]


@dataclass(frozen=True)
class Dataset:
    """
    Inputs ``X`` (n×p) with class indices ``Y`` (n,) or regression targets
    ``Y`` (n×q).
    """

    X: np.ndarray
    Y: np.ndarray
    name: str = "dataset"
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.X.ndim != 2:
            raise DimensionError(f"{self.name}: X must be (n×p), got shape {self.X.shape}")
        if len(self.Y) != len(self.X):
            raise DimensionError(f"{self.name}: {len(self.X)} rows in X but {len(self.Y)} labels")
        if self.is_classification and self.Y.size and self.Y.min() < 0:
            raise DimensionError(f"{self.name}: class indices must be non-negative")

    def __len__(self) -> int:
        return len(self.X)

    @property
    def is_classification(self) -> bool:
        return self.Y.ndim == 1 and np.issubdtype(self.Y.dtype, np.integer)

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def n_classes(self) -> Optional[int]:
        if not self.is_classification:
            return None
        return int(self.meta.get("n_classes", int(self.Y.max()) + 1 if self.Y.size else 0))

    @property
    def batch(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.X, self.Y

    def take(self, indices: Sequence[int], name: Optional[str] = None) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return replace(self, X=as_tensor(self.X[indices]), Y=self.Y[indices], name=name or self.name)


def make_dataset(X, Y, name: str, *, task: Task = "classification", **meta: Any) -> Dataset:
    """
    Validated dataset with float64 inputs.

    Classification labels must be integral and become an int64 vector;
    regression targets stay float64 and a 1-D target becomes one column.
    """
    if task not in ("classification", "regression"):
        raise ConfigError(f"unknown task {task!r}", field="task")
    X = as_tensor(X, op=f"{name} inputs")
    Y = np.asarray(Y)
    if task == "classification":
        if Y.ndim != 1:
            raise DimensionError(f"{name}: class labels must be a vector, got shape {Y.shape}")
        if not np.issubdtype(Y.dtype, np.integer):
            if not np.issubdtype(Y.dtype, np.floating) or np.any(Y != np.rint(Y)):
                raise FormatError(f"{name}: class labels must be integers")
        Y = Y.astype(np.int64)
    else:
        Y = as_tensor(Y.reshape(-1, 1) if Y.ndim == 1 else Y, op=f"{name} targets")
    Y.flags.writeable = False
    return Dataset(X=X, Y=Y, name=name, meta={**meta, "task": task})


def standardize(train: Dataset, *others: Dataset) -> Tuple[Dataset, ...]:
    """
    Zero-mean, unit-variance features using the training split's constants.

    Constant features are only centered. The constants are stored in each
    returned dataset's ``meta`` under ``mean`` and ``std``.
    """
    mean = train.X.mean(axis=0)
    std = train.X.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    constants = {"mean": mean.tolist(), "std": std.tolist()}
    return tuple(
        replace(ds, X=as_tensor((ds.X - mean) / std, op="standardize"), meta={**ds.meta, **constants})
        for ds in (train, *others)
    )


def split(ds: Dataset, fractions: Sequence[float], rng: RngStream) -> Tuple[Dataset, ...]:
    """
    Disjoint random splits of ``ds``.

    Args:
        ds: Dataset to split.
        fractions: Leading split fractions; the remainder forms the last
            split, e.g. ``(0.6, 0.2)`` gives train/validation/test.
        rng: Stream whose draw 0 fixes the permutation, so the split depends
            only on (seed, stream id, fractions).

    Returns:
        ``len(fractions) + 1`` datasets named ``<name>/split<k>``.
    """
    if any(f <= 0 for f in fractions) or sum(fractions) >= 1.0:
        raise ConfigError(f"split fractions {list(fractions)} must be positive and sum below 1", field="split")
    n = len(ds)
    order = rng.permutation(n, draw_index=0)
    bounds = np.floor(np.cumsum(fractions) * n).astype(int)
    parts = np.split(order, bounds)
    if any(len(p) == 0 for p in parts):
        raise ConfigError(f"split fractions {list(fractions)} leave an empty split of {n} examples", field="split")
    return tuple(ds.take(np.sort(p), name=f"{ds.name}/split{k}") for k, p in enumerate(parts))


def inject_label_noise(ds: Dataset, fraction: float, rng: RngStream) -> Dataset:
    """Reassign ``fraction`` of the labels to a different, uniformly chosen class."""
    if not ds.is_classification:
        raise ConfigError("label noise needs class labels", field="label_noise")
    if not 0.0 <= fraction <= 1.0:
        raise ConfigError(f"must lie in [0, 1], got {fraction}", field="label_noise")
    n_flip = int(round(fraction * len(ds)))
    if n_flip == 0:
        return ds
    classes = ds.n_classes
    if classes < 2:
        raise ConfigError("label noise needs at least two classes", field="label_noise")
    gen = rng.next_generator()
    chosen = gen.choice(len(ds), size=n_flip, replace=False)
    shifts = gen.integers(1, classes, size=n_flip)
    labels = np.array(ds.Y)
    labels[chosen] = (labels[chosen] + shifts) % classes
    labels.flags.writeable = False
    logger.warning("flipped %d of %d labels in %s", n_flip, len(ds), ds.name)
    return replace(ds, Y=labels, meta={**ds.meta, "label_noise": fraction, "n_classes": classes})
