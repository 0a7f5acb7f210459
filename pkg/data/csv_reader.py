import logging
from pathlib import Path
from typing import Union

import numpy as np

from errors import FormatError

from .dataset import Dataset, make_dataset

logger = logging.getLogger(__name__)


def read_csv(path: Union[str, Path], task: str = "classification") -> Dataset:
    """
    Load a tabular dataset.

    The file is UTF-8 with one header row, comma separators and '.' decimals;
    the last column is the label (class index) or, for ``task="regression"``,
    the target.

    Args:
        path: CSV file.
        task: ``classification`` or ``regression``.

    Returns:
        Dataset named after the file.
    """
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as f:
            header = f.readline().strip().split(",")
            table = np.loadtxt(f, delimiter=",", ndmin=2, dtype=np.float64)
    except (OSError, ValueError, UnicodeDecodeError) as exc:
        raise FormatError(f"{path}: cannot parse CSV: {exc}") from exc
    if table.shape[0] == 0:
        raise FormatError(f"{path}: no data rows")
    if table.shape[1] != len(header) or table.shape[1] < 2:
        raise FormatError(f"{path}: header names {len(header)} columns but rows hold {table.shape[1]}")
    X, y = table[:, :-1], table[:, -1]
    if task == "classification":
        if np.any(y != np.rint(y)) or np.any(y < 0):
            raise FormatError(f"{path}: column '{header[-1]}' must hold non-negative integer class labels")
        y = y.astype(np.int64)
        meta = {"n_classes": int(y.max()) + 1, "columns": header}
    else:
        y = y.reshape(-1, 1)
        meta = {"columns": header}
    logger.info("read %d rows × %d features from %s", len(X), X.shape[1], path)
    return make_dataset(X, y, name=path.stem, task=task, **meta)
