"""
Multilayer perceptron: spec, parameters and the differentiable forward pass.

Weights follow the row convention: the weight of layer k has shape
(n_k, n_{k-1}) and row s holds the incoming weights of output neuron s, so
``h_k = act(h_{k-1} @ w_kᵀ + b_k)``. The flatness layer ℓ is a 1-based
index into the weight list and defaults to L-1, the matrix feeding the
output weights.
"""

from dataclasses import dataclass, field, replace
from typing import List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from autodiff import Graph, Var, ops
from errors import DimensionError, ShapeChainError
from tensor import RngStream, as_tensor

from .instrumentation import record_loss_evaluation
from .losses import LOSSES

Activation = Literal["tanh", "relu", "softplus"]
LossKind = Literal["cross_entropy", "mse"]

Batch = Tuple[np.ndarray, np.ndarray]


class MlpSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    widths: List[int] = Field(..., description="Layer widths [n0, ..., nL]", json_schema_extra={"example": [2, 32, 16, 2]})
    activation: Activation = Field(default="tanh", description="Hidden-layer activation")
    loss: LossKind = Field(default="cross_entropy", description="Training loss")
    flatness_layer: Optional[int] = Field(
        default=None, description="1-based weight index ℓ measured by κ; defaults to L-1"
    )
    use_bias: Union[bool, List[bool]] = Field(default=True, description="Bias flag, global or per layer")

    @field_validator("widths")
    @classmethod
    def _check_widths(cls, widths: List[int]) -> List[int]:
        if len(widths) < 3:
            raise ValueError("need at least two weight layers (three widths)")
        if any(n < 1 for n in widths):
            raise ValueError("every width must be >= 1")
        return widths

    @model_validator(mode="after")
    def _check_layers(self) -> "MlpSpec":
        n_layers = len(self.widths) - 1
        if self.flatness_layer is not None and not 1 <= self.flatness_layer <= n_layers:
            raise ValueError(f"flatness_layer must lie in [1, {n_layers}], got {self.flatness_layer}")
        if isinstance(self.use_bias, list) and len(self.use_bias) != n_layers:
            raise ValueError(f"use_bias lists {len(self.use_bias)} flags for {n_layers} layers")
        return self

    @property
    def n_layers(self) -> int:
        return len(self.widths) - 1

    @property
    def layer(self) -> int:
        """Resolved flatness layer ℓ (1-based)."""
        return self.flatness_layer if self.flatness_layer is not None else self.n_layers - 1

    @property
    def bias_flags(self) -> List[bool]:
        if isinstance(self.use_bias, bool):
            return [self.use_bias] * self.n_layers
        return list(self.use_bias)

    def weight_shape(self, k: int) -> Tuple[int, int]:
        """Shape of the 1-based weight ``k``."""
        return (self.widths[k], self.widths[k - 1])


@dataclass(frozen=True)
class ModelState:
    spec: MlpSpec
    weights: Tuple[np.ndarray, ...]
    biases: Optional[Tuple[Optional[np.ndarray], ...]] = None

    def __post_init__(self):
        spec = self.spec
        if len(self.weights) != spec.n_layers:
            raise ShapeChainError(f"{len(self.weights)} weight matrices for {spec.n_layers} layers")
        for k, w in enumerate(self.weights, start=1):
            if w.shape != spec.weight_shape(k):
                raise ShapeChainError(f"layer {k} weight has shape {w.shape}, widths require {spec.weight_shape(k)}")
        flags = spec.bias_flags
        if self.biases is None:
            if any(flags):
                raise ShapeChainError("spec enables biases but none were given")
            return
        if len(self.biases) != spec.n_layers:
            raise ShapeChainError(f"{len(self.biases)} bias vectors for {spec.n_layers} layers")
        for k, (b, flag) in enumerate(zip(self.biases, flags), start=1):
            if (b is None) == flag:
                raise ShapeChainError(f"layer {k} bias presence disagrees with use_bias")
            if b is not None and b.shape != (spec.widths[k],):
                raise ShapeChainError(f"layer {k} bias has shape {b.shape}, expected {(spec.widths[k],)}")

    @property
    def flatness_weight(self) -> np.ndarray:
        return self.weights[self.spec.layer - 1]

    def parameters(self) -> List[np.ndarray]:
        """Weights first, then the enabled biases."""
        params = list(self.weights)
        if self.biases is not None:
            params.extend(b for b in self.biases if b is not None)
        return params

    def with_parameters(self, params: Sequence[np.ndarray]) -> "ModelState":
        params = [as_tensor(p, op="with_parameters") for p in params]
        n = self.spec.n_layers
        weights = tuple(params[:n])
        biases = None
        if self.biases is not None:
            rest = iter(params[n:])
            biases = tuple(next(rest) if b is not None else None for b in self.biases)
        return replace(self, weights=weights, biases=biases)

    def with_weights(self, weights: Sequence[np.ndarray]) -> "ModelState":
        return replace(self, weights=tuple(as_tensor(w, op="with_weights") for w in weights))


def init_state(spec: MlpSpec, rng: RngStream) -> ModelState:
    """Glorot-normal weights (He for relu) and zero biases."""
    weights = []
    for k in range(1, spec.n_layers + 1):
        fan_out, fan_in = spec.weight_shape(k)
        if spec.activation == "relu":
            scale = np.sqrt(2.0 / fan_in)
        else:
            scale = np.sqrt(2.0 / (fan_in + fan_out))
        weights.append(as_tensor(rng.normal((fan_out, fan_in), scale)))
    biases = None
    if any(spec.bias_flags):
        biases = tuple(
            as_tensor(np.zeros(spec.widths[k])) if flag else None
            for k, flag in enumerate(spec.bias_flags, start=1)
        )
    return ModelState(spec=spec, weights=tuple(weights), biases=biases)


@dataclass
class ParamVars:
    graph: Graph
    weights: List[Var]
    biases: List[Optional[Var]] = field(default_factory=list)

    def all(self) -> List[Var]:
        return self.weights + [b for b in self.biases if b is not None]


def bind_parameters(graph: Graph, state: ModelState) -> ParamVars:
    """Register every parameter of ``state`` as a differentiation target."""
    weights = [graph.leaf(w, name=f"w{k}") for k, w in enumerate(state.weights, start=1)]
    biases: List[Optional[Var]] = []
    if state.biases is not None:
        biases = [
            graph.leaf(b, name=f"b{k}") if b is not None else None
            for k, b in enumerate(state.biases, start=1)
        ]
    return ParamVars(graph=graph, weights=weights, biases=biases)


@dataclass
class ForwardPass:
    loss: Var
    outputs: Var
    params: ParamVars
    layer: int

    @property
    def graph(self) -> Graph:
        return self.params.graph

    @property
    def flatness_weight(self) -> Var:
        return self.params.weights[self.layer - 1]


def _activate(z: Var, activation: str) -> Var:
    if activation == "tanh":
        return ops.tanh(z)
    if activation == "relu":
        return ops.relu(z)
    return ops.softplus(z)


def _check_inputs(spec: MlpSpec, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise DimensionError(f"forward: expected a non-empty (B×{spec.widths[0]}) batch, got shape {X.shape}")
    if X.shape[1] != spec.widths[0]:
        raise DimensionError(f"forward: input width {X.shape[1]} does not match model input width {spec.widths[0]}")
    return X


def forward_loss(
    state: ModelState,
    batch: Batch,
    *,
    params: Optional[ParamVars] = None,
    curvature: bool = False,
) -> ForwardPass:
    """
    Differentiable batch-mean loss.

    Args:
        state: Model parameters and spec.
        batch: ``(X, Y)`` with X of shape (B×n0); Y holds class indices for
            cross-entropy or targets for mse.
        params: Reuse existing parameter Vars (and their graph) instead of
            recording a fresh graph.
        curvature: Count this pass as a curvature evaluation (a loss that
            only feeds a Hessian) rather than a primal one.

    Returns:
        ForwardPass whose ``loss`` is the scalar Var.
    """
    X, Y = batch
    spec = state.spec
    X = _check_inputs(spec, X)
    if params is None:
        params = bind_parameters(Graph(), state)
    h = params.graph.constant(X)
    for k, w in enumerate(params.weights):
        z = h @ w.T
        if params.biases and params.biases[k] is not None:
            z = z + params.biases[k]
        h = _activate(z, spec.activation) if k < spec.n_layers - 1 else z
    loss = LOSSES[spec.loss](h, Y)
    record_loss_evaluation(curvature)
    return ForwardPass(loss=loss, outputs=h, params=params, layer=spec.layer)


def predict(state: ModelState, X: np.ndarray) -> np.ndarray:
    """Network outputs without recording a graph."""
    spec = state.spec
    h = _check_inputs(spec, X)
    for k, w in enumerate(state.weights):
        z = h @ w.T
        if state.biases is not None and state.biases[k] is not None:
            z = z + state.biases[k]
        if k < spec.n_layers - 1:
            if spec.activation == "tanh":
                z = np.tanh(z)
            elif spec.activation == "relu":
                z = np.maximum(z, 0.0)
            else:
                z = np.logaddexp(0.0, z)
        h = z
    return h


@dataclass(frozen=True)
class Evaluation:
    loss: float
    accuracy: Optional[float]
    n: int


def evaluate(state: ModelState, batch: Batch) -> Evaluation:
    """Mean loss, and accuracy for classification models."""
    X, Y = batch
    loss = forward_loss(state, batch).loss.item()
    accuracy = None
    if state.spec.loss == "cross_entropy":
        predicted = np.argmax(predict(state, X), axis=1)
        accuracy = float(np.mean(predicted == np.asarray(Y)))
    return Evaluation(loss=loss, accuracy=accuracy, n=len(X))
