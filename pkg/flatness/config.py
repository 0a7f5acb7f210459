from dataclasses import dataclass
from typing import Any, Dict, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from autodiff import DEFAULT_DENSE_CAP
from tensor import Stream

FlatnessMode = Literal["neuronwise", "trace-exact", "trace-hutchinson"]
HessianBatch = Literal["minibatch", "full-set"]

DENSE_MODES = ("neuronwise", "trace-exact")


class FlatnessConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    mode: FlatnessMode = Field(default="neuronwise", description="Which flatness measure to compute")
    lam: float = Field(
        default=0.1, ge=0.0, alias="lambda", description="Regularization coefficient λ", json_schema_extra={"example": 0.1}
    )
    samples: int = Field(default=10, ge=1, description="Hutchinson probe count V")
    hessian_batch: HessianBatch = Field(
        default="minibatch", description="Data the Hessian is taken over during training"
    )
    dense_cap: int = Field(default=DEFAULT_DENSE_CAP, ge=1, description="Largest layer (parameters) for dense modes")
    stream: int = Field(default=int(Stream.HUTCHINSON), ge=0, description="RngStream id for Rademacher probes")
    clamp_estimate: bool = Field(
        default=True, description="Penalize max(κ̂, 0) when training on a Hutchinson estimate"
    )

    @property
    def is_dense(self) -> bool:
        return self.mode in DENSE_MODES

    @property
    def clamps(self) -> bool:
        return self.clamp_estimate and self.mode == "trace-hutchinson"


@dataclass
class KappaReport:
    """One flatness measurement of a layer."""

    kappa: float
    trace_total: float
    mode: str
    wall_time_ms: float = 0.0
    gram: Optional[np.ndarray] = None
    pair_traces: Optional[np.ndarray] = None

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"mode": self.mode, "kappa": self.kappa, "trace_total": self.trace_total}
        if self.gram is not None:
            out["gram"] = np.asarray(self.gram).tolist()
        if self.pair_traces is not None:
            out["pair_traces"] = np.asarray(self.pair_traces).tolist()
        out["wall_time_ms"] = self.wall_time_ms
        return out
