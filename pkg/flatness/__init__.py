# Relative flatness measures and the flatness-aware regularizer
from .config import DENSE_MODES, FlatnessConfig, FlatnessMode, KappaReport
from .hutchinson import hessian_trace_estimate, hessian_trace_estimate_var, hutchinson_samples, hutchinson_trace
from .measures import (
    block_traces,
    block_traces_var,
    exact_trace,
    kappa_neuronwise,
    kappa_trace,
    kappa_var,
    measure_kappa,
)
from .regularizer import FamGradient, fam_gradient, fam_objective
from .oracles import (
    ORACLE_CAP,
    KappaGradientParts,
    central_difference_gradient,
    finite_difference_hessian,
    kappa_parts_autodiff,
    closed_form_kappa_oracle,
    closed_form_kappa_terms,
    mlp_loss_builder,
    lemma1_oracle,
    relative_error,
    scalar_fn,
    worst_relative_error,
)

__all__ = [
    "DENSE_MODES",
    "FlatnessConfig",
    "FlatnessMode",
    "KappaReport",
    "hessian_trace_estimate",
    "hessian_trace_estimate_var",
    "hutchinson_samples",
    "hutchinson_trace",
    "block_traces",
    "block_traces_var",
    "exact_trace",
    "kappa_neuronwise",
    "kappa_trace",
    "kappa_var",
    "measure_kappa",
    "FamGradient",
    "fam_gradient",
    "fam_objective",
    "ORACLE_CAP",
    "KappaGradientParts",
    "central_difference_gradient",
    "finite_difference_hessian",
    "kappa_parts_autodiff",
    "closed_form_kappa_oracle",
    "closed_form_kappa_terms",
    "lemma1_oracle",
    "mlp_loss_builder",
    "relative_error",
    "scalar_fn",
    "worst_relative_error",
]
