"""
metrics.csv rows.

Columns are fixed and ordered; floats use 12 significant digits and missing
values are empty cells, so identical runs produce identical bytes. ``kappa_mode``
names the measure behind a ``kappa`` cell.
"""

import csv
from dataclasses import astuple, dataclass
from pathlib import Path
from typing import IO, Optional, Union

COLUMNS = (
    "epoch",
    "step",
    "train_loss",
    "test_loss",
    "test_acc",
    "kappa",
    "lr",
    "step_ms",
    "loss_evals",
    "kappa_mode",
)


@dataclass
class MetricsRow:
    epoch: int
    step: int
    train_loss: Optional[float] = None
    test_loss: Optional[float] = None
    test_acc: Optional[float] = None
    kappa: Optional[float] = None
    lr: Optional[float] = None
    step_ms: Optional[float] = None
    loss_evals: Optional[float] = None
    kappa_mode: Optional[str] = None


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, int) and not isinstance(value, bool):
        return str(value)
    return format(float(value), ".12g")


class MetricsWriter:
    """CSV writer with the fixed header; use as a context manager."""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self._file: Optional[IO[str]] = None
        self._writer = None

    def __enter__(self) -> "MetricsWriter":
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._file = open(self.path, "w", encoding="utf-8", newline="")
        self._writer = csv.writer(self._file, lineterminator="\n")
        self._writer.writerow(COLUMNS)
        return self

    def write(self, row: MetricsRow) -> None:
        self._writer.writerow([format_cell(v) for v in astuple(row)])
        self._file.flush()

    def __exit__(self, *exc) -> None:
        if self._file is not None:
            self._file.close()
            self._file = None
