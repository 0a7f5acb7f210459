"""
Gradient checks behind ``relflat gradcheck``.

Sections, each reporting its largest relative error and where it occurred:

- ``loss-grad``: autodiff loss gradient vs central differences
- ``fam-grad``: gradient of ``loss + λ κ`` vs central differences of the objective
- ``kappa-term1``: product-rule part of λ∇κ, nested autodiff vs closed form
- ``kappa-grad``: full λ∇κ, nested autodiff vs closed form with
  finite-differenced third derivatives
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from autodiff import grad
from errors import GradcheckFailure
from flatness import (
    FlatnessConfig,
    central_difference_gradient,
    fam_gradient,
    kappa_neuronwise,
    kappa_parts_autodiff,
    closed_form_kappa_terms,
    mlp_loss_builder,
    worst_relative_error,
)
from model import Batch, MlpSpec, ModelState, forward_loss, init_state
from tensor import RngStream, Stream

logger = logging.getLogger(__name__)


def _default_model() -> MlpSpec:
    return MlpSpec(widths=[2, 3, 2], activation="tanh", loss="cross_entropy")


class GradcheckConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    seed: int = Field(default=0, ge=0, description="Seed for weights and the synthetic batch")
    model: MlpSpec = Field(default_factory=_default_model)
    batch_size: int = Field(default=8, ge=1, description="Synthetic batch size")
    lam: float = Field(default=1.0, ge=0, alias="lambda", description="λ used by the κ sections")
    h: float = Field(default=1e-5, gt=0, description="Central-difference step for gradients")
    oracle_h: float = Field(default=1e-4, gt=0, description="Step for the finite-differenced block traces")
    loss_tolerance: float = Field(default=1e-6, gt=0)
    fam_tolerance: float = Field(default=1e-4, gt=0)
    term1_tolerance: float = Field(default=1e-4, gt=0)
    kappa_tolerance: float = Field(default=1e-3, gt=0)


@dataclass
class SectionResult:
    name: str
    error: float
    tolerance: float
    worst: Tuple[int, Tuple[int, ...]]

    @property
    def passed(self) -> bool:
        return self.error <= self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        layer, index = self.worst
        return {
            "section": self.name,
            "max_rel_error": self.error,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "worst_layer": layer,
            "worst_index": list(index),
        }


@dataclass
class GradcheckReport:
    sections: List[SectionResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.sections)

    @property
    def max_error(self) -> float:
        return max((s.error for s in self.sections), default=0.0)

    def raise_for_failure(self) -> None:
        failing = [s for s in self.sections if not s.passed]
        if failing:
            worst = max(failing, key=lambda s: s.error / s.tolerance)
            raise GradcheckFailure(worst.name, worst.worst, worst.error, worst.tolerance)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "max_rel_error": self.max_error,
            "sections": [s.to_dict() for s in self.sections],
        }


def synthetic_batch(spec: MlpSpec, batch_size: int, rng: RngStream) -> Batch:
    X = rng.normal((batch_size, spec.widths[0]))
    if spec.loss == "cross_entropy":
        Y = rng.integers(0, spec.widths[-1], batch_size)
    else:
        Y = rng.normal((batch_size, spec.widths[-1]))
    return X, Y


def _loss_fn(state: ModelState, batch: Batch):
    def f(arrays: List[np.ndarray]) -> float:
        return forward_loss(state.with_parameters(arrays), batch).loss.item()

    return f


def _fam_objective_fn(state: ModelState, batch: Batch, lam: float):
    def f(arrays: List[np.ndarray]) -> float:
        forward = forward_loss(state.with_parameters(arrays), batch)
        if lam == 0.0:
            return forward.loss.item()
        return forward.loss.item() + lam * kappa_neuronwise(forward.loss, forward.flatness_weight).kappa

    return f


def run_gradcheck(cfg: GradcheckConfig, state: Optional[ModelState] = None, batch: Optional[Batch] = None) -> GradcheckReport:
    """
    Run every section on one model and batch.

    Args:
        cfg: Model, tolerances and steps.
        state: Model to check; initialized from ``cfg.seed`` when omitted.
        batch: Data; a synthetic batch from ``cfg.seed`` when omitted.
    """
    spec = cfg.model
    if spec.activation == "relu":
        logger.warning(
            "relu model: second derivatives are taken as zero and inputs landing exactly on a kink are not sampled"
        )
    if state is None:
        state = init_state(spec, RngStream(cfg.seed, Stream.INIT))
    if batch is None:
        batch = synthetic_batch(spec, cfg.batch_size, RngStream(cfg.seed, Stream.DATA))
    params = state.parameters()
    report = GradcheckReport()

    forward = forward_loss(state, batch)
    loss_grads = grad(forward.loss, forward.params.all())
    reference = central_difference_gradient(_loss_fn(state, batch), params, cfg.h)
    report.sections.append(_section("loss-grad", loss_grads, reference, cfg.loss_tolerance))

    flat = FlatnessConfig(mode="neuronwise", lam=cfg.lam)
    fam = fam_gradient(state, batch, flat, measure=False)
    reference = central_difference_gradient(_fam_objective_fn(state, batch, cfg.lam), params, cfg.h)
    report.sections.append(_section("fam-grad", fam.grads, reference, cfg.fam_tolerance))

    builder = mlp_loss_builder(state, batch)
    layer = spec.layer
    closed = closed_form_kappa_terms(builder, params, layer, cfg.oracle_h)
    nested = kappa_parts_autodiff(builder, params, layer)
    kappa_part = [g - lg for g, lg in zip(fam.grads, loss_grads)]
    nested_term1 = kappa_part[layer - 1] - cfg.lam * nested.term2[layer - 1]
    report.sections.append(
        _section("kappa-term1", [nested_term1], [cfg.lam * closed.term1], cfg.term1_tolerance, layer_offset=layer - 1)
    )
    report.sections.append(
        _section("kappa-grad", kappa_part, [cfg.lam * t for t in closed.total()], cfg.kappa_tolerance)
    )
    for s in report.sections:
        logger.info("%s: max relative error %.3e (tolerance %.0e)", s.name, s.error, s.tolerance)
    return report


def _section(name: str, approx, reference, tolerance: float, layer_offset: int = 0) -> SectionResult:
    error, (layer, index) = worst_relative_error(approx, reference)
    return SectionResult(name=name, error=error, tolerance=tolerance, worst=(layer + layer_offset, index))
