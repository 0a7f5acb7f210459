"""
Textual JSON checkpoints.

Layout::

    {"format": "relflat-ckpt-v1",
     "spec": {"widths": [...], "activation": ..., "loss": ...,
              "flatness_layer": ..., "use_bias": ...},
     "weights": [[row-major floats], ...],
     "biases": [[floats] | null, ...] | null}

Floats are written with 17 significant digits, which round-trips every
float64 exactly; serialization is canonical so save -> load -> save is
byte-identical.
"""

import json
import logging
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from errors import FormatError, ShapeChainError

from .mlp import MlpSpec, ModelState

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "relflat-ckpt-v1"

PathLike = Union[str, Path]


class CheckpointDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    format: str = Field(..., description="Format tag", json_schema_extra={"example": CHECKPOINT_FORMAT})
    spec: MlpSpec
    weights: List[List[float]] = Field(..., description="Row-major weights, one list per layer")
    biases: Optional[List[Optional[List[float]]]] = Field(default=None, description="Bias vectors per layer")


def _float(x: float) -> str:
    text = "%.17g" % x
    if "." not in text and "e" not in text and "n" not in text:
        text += ".0"
    return text


def _floats(values: np.ndarray) -> str:
    return "[" + ", ".join(_float(float(x)) for x in np.ravel(values)) + "]"


def dumps_checkpoint(state: ModelState) -> str:
    spec = json.dumps(state.spec.model_dump(mode="json"), sort_keys=True)
    weights = ",\n    ".join(_floats(w) for w in state.weights)
    if state.biases is None:
        biases = "null"
    else:
        items = ",\n    ".join("null" if b is None else _floats(b) for b in state.biases)
        biases = "[\n    " + items + "\n  ]"
    return (
        "{\n"
        f'  "format": "{CHECKPOINT_FORMAT}",\n'
        f'  "spec": {spec},\n'
        f'  "weights": [\n    {weights}\n  ],\n'
        f'  "biases": {biases}\n'
        "}\n"
    )


def save_checkpoint(state: ModelState, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_checkpoint(state), encoding="utf-8")
    logger.debug("wrote checkpoint %s", path)
    return path


def _field_path(error: dict) -> str:
    return ".".join(str(part) for part in error["loc"]) or "<root>"


def loads_checkpoint(text: str) -> ModelState:
    """
    Parse and validate a checkpoint document.

    Raises:
        FormatError: Malformed JSON, unknown format tag, or a field with the
            wrong type (the message names the field).
        ShapeChainError: Weights or biases do not fit the declared widths.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"checkpoint is not valid JSON: {exc}") from exc
    try:
        doc = CheckpointDocument.model_validate(raw)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise FormatError(f"checkpoint field '{_field_path(first)}': {first['msg']}") from exc
    if doc.format != CHECKPOINT_FORMAT:
        raise FormatError(f"checkpoint field 'format': expected {CHECKPOINT_FORMAT!r}, got {doc.format!r}")

    spec = doc.spec
    if len(doc.weights) != spec.n_layers:
        raise ShapeChainError(f"checkpoint has {len(doc.weights)} weight layers, widths declare {spec.n_layers}")
    weights = []
    for k, flat in enumerate(doc.weights, start=1):
        rows, cols = spec.weight_shape(k)
        if len(flat) != rows * cols:
            raise ShapeChainError(
                f"layer {k} stores {len(flat)} weights, widths {spec.widths[k - 1]}->{spec.widths[k]} need {rows * cols}"
            )
        weights.append(np.array(flat, dtype=np.float64).reshape(rows, cols))
    biases = None
    if doc.biases is not None:
        if len(doc.biases) != spec.n_layers:
            raise ShapeChainError(f"checkpoint has {len(doc.biases)} bias entries, widths declare {spec.n_layers}")
        biases = tuple(None if b is None else np.array(b, dtype=np.float64) for b in doc.biases)
    for arr in weights + [b for b in (biases or ()) if b is not None]:
        arr.flags.writeable = False
    return ModelState(spec=spec, weights=tuple(weights), biases=biases)


def load_checkpoint(path: PathLike) -> ModelState:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"cannot read checkpoint {path}: {exc}") from exc
    return loads_checkpoint(text)
