"""
Training loop behind ``relflat train``.

Outputs in ``cfg.output_dir``:

- ``resolved_config.json``: the config actually run (after env overrides)
- ``metrics.csv``: one row per epoch, plus per-step rows when enabled
- ``checkpoint.json``: final parameters
- ``summary.json``: final losses, accuracy and full-set κ
"""

import json
import logging
import math
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional

from tqdm import tqdm

from autodiff import DEFAULT_DENSE_CAP
from data import BatchPlan, Dataset, batches
from errors import ConfigError, NonFiniteError, TrainingDivergedError
from flatness import DENSE_MODES, FlatnessConfig, KappaReport, measure_kappa
from model import ModelState, evaluate, forward_loss, init_state, save_checkpoint
from optim import OptimState, init_optim_state, lr_at, train_step
from tensor import RngStream, Stream

from .config import MetricsConfig, RunConfig, dump_config
from .datasets import Splits, provision
from .metrics import MetricsRow, MetricsWriter

logger = logging.getLogger(__name__)


def full_set_kappa(
    state: ModelState,
    ds: Dataset,
    mode: str,
    samples: int,
    seed: int,
    dense_cap: int = DEFAULT_DENSE_CAP,
) -> KappaReport:
    """
    κ of the flatness layer over all of ``ds``.

    Dense modes fall back to the Hutchinson estimate when the layer is above
    ``dense_cap``. Probes come from a fresh ``Stream.KAPPA_EVAL`` stream, so
    the value depends only on (state, ds, seed).
    """
    w = state.flatness_weight
    if mode in DENSE_MODES and w.size > dense_cap:
        logger.warning(
            "flatness layer has %d parameters (cap %d); measuring κ with trace-hutchinson instead of %s",
            w.size,
            dense_cap,
            mode,
        )
        mode = "trace-hutchinson"
    cfg = FlatnessConfig(mode=mode, samples=samples, hessian_batch="full-set", dense_cap=dense_cap)
    forward = forward_loss(state, ds.batch)
    return measure_kappa(forward.loss, forward.flatness_weight, cfg, RngStream(seed, Stream.KAPPA_EVAL))


def check_divergence(loss: float, reference: float, factor: Optional[float], step: int) -> None:
    """
    Raise ``TrainingDivergedError`` when ``loss`` is non-finite or above
    ``factor`` times the initial ``reference`` loss.
    """
    if not math.isfinite(loss):
        raise TrainingDivergedError(step)
    if factor is not None and reference > 0.0 and loss > factor * reference:
        raise TrainingDivergedError(
            step, reason=f"loss {loss:.6g} above {factor:g}x the initial {reference:.6g}"
        )


@dataclass
class TrainResult:
    state: ModelState
    epochs: int
    steps: int
    train_loss: float
    test_loss: float
    test_acc: Optional[float]
    val_loss: Optional[float]
    val_acc: Optional[float]
    kappa: float
    kappa_mode: str
    regularizer: str

    def summary(self) -> Dict[str, Any]:
        out = asdict(self)
        out.pop("state")
        return out


class Trainer:
    """Runs one ``RunConfig`` from initialization to the final checkpoint."""

    def __init__(self, cfg: RunConfig, *, progress: bool = True):
        self.cfg = cfg
        self.output_dir = Path(cfg.output_dir)
        self.progress = progress

    def _check_model(self, splits: Splits) -> None:
        spec = self.cfg.model
        train = splits.train
        if spec.widths[0] != train.n_features:
            raise ConfigError(
                f"input width {spec.widths[0]} but the data has {train.n_features} features", field="model.widths"
            )
        if spec.loss == "cross_entropy":
            if not train.is_classification:
                raise ConfigError("cross_entropy needs class labels", field="model.loss")
            classes = max(train.n_classes, splits.test.n_classes or 0)
            if spec.widths[-1] < classes:
                raise ConfigError(
                    f"output width {spec.widths[-1]} is below the {classes} classes", field="model.widths"
                )
        regularizer = self.cfg.optim.regularizer
        if regularizer.kind == "fam" and regularizer.flatness.is_dense:
            rows, cols = spec.weight_shape(spec.layer)
            if rows * cols > regularizer.flatness.dense_cap:
                raise ConfigError(
                    f"flatness layer has {rows * cols} parameters, above the dense cap "
                    f"{regularizer.flatness.dense_cap}; use mode 'trace-hutchinson'",
                    field="optim.regularizer.flatness.mode",
                )

    def _kappa_due(self, epoch: int) -> bool:
        every = self.cfg.metrics.kappa_every
        return every > 0 and epoch % every == 0

    def _measure(self, state: ModelState, train: Dataset) -> KappaReport:
        metrics: MetricsConfig = self.cfg.metrics
        return full_set_kappa(state, train, metrics.kappa_mode, metrics.kappa_samples, self.cfg.seed)

    def train(self) -> TrainResult:
        cfg = self.cfg
        self.output_dir.mkdir(parents=True, exist_ok=True)
        (self.output_dir / "resolved_config.json").write_text(dump_config(cfg), encoding="utf-8")

        splits = provision(cfg.dataset, cfg.seed)
        self._check_model(splits)
        train, test = splits.train, splits.test

        state = init_state(cfg.model, RngStream(cfg.seed, Stream.INIT))
        opt: OptimState = init_optim_state(state)
        plan = BatchPlan.seeded(cfg.batch.size, cfg.seed, cfg.batch.drop_last)
        regularizer = cfg.optim.regularizer
        probe_rng = None
        full_batch = None
        if regularizer.kind == "fam":
            probe_rng = RngStream(cfg.seed, regularizer.flatness.stream)
            if regularizer.flatness.hessian_batch == "full-set":
                full_batch = train.batch

        initial_loss = evaluate(state, train.batch).loss
        kappa_mode = regularizer.flatness.mode if regularizer.kind == "fam" else None
        step = 0
        logger.info(
            "training %s for %d epochs (%s regularizer, seed %d)",
            cfg.model.widths,
            cfg.epochs,
            regularizer.kind,
            cfg.seed,
        )
        with MetricsWriter(self.output_dir / "metrics.csv") as writer:
            epochs = tqdm(range(1, cfg.epochs + 1), desc="epochs", disable=None if self.progress else True)
            for epoch in epochs:
                lr = lr_at(cfg.optim.schedule, epoch - 1, cfg.epochs, cfg.optim.lr)
                step_ms: List[float] = []
                evals: List[int] = []
                for batch in batches(train, plan, epoch - 1):
                    step += 1
                    started = time.perf_counter()
                    try:
                        result = train_step(state, batch, opt, cfg.optim, lr, probe_rng, full_batch=full_batch)
                    except NonFiniteError as exc:
                        raise TrainingDivergedError(step, exc) from exc
                    check_divergence(result.loss, initial_loss, cfg.divergence_factor, step)
                    elapsed = (time.perf_counter() - started) * 1000.0
                    state, opt = result.state, result.opt
                    step_ms.append(elapsed)
                    evals.append(result.loss_evals)
                    if cfg.metrics.per_step:
                        writer.write(
                            MetricsRow(
                                epoch=epoch,
                                step=step,
                                train_loss=result.loss,
                                kappa=result.kappa,
                                lr=lr,
                                step_ms=elapsed if cfg.metrics.record_timing else None,
                                loss_evals=result.loss_evals,
                                kappa_mode=kappa_mode if result.kappa is not None else None,
                            )
                        )
                opt.epoch_count = epoch

                try:
                    train_eval = evaluate(state, train.batch)
                    test_eval = evaluate(state, test.batch)
                except NonFiniteError as exc:
                    raise TrainingDivergedError(step, exc) from exc
                check_divergence(train_eval.loss, initial_loss, cfg.divergence_factor, step)
                report = self._measure(state, train) if self._kappa_due(epoch) else None
                writer.write(
                    MetricsRow(
                        epoch=epoch,
                        step=step,
                        train_loss=train_eval.loss,
                        test_loss=test_eval.loss,
                        test_acc=test_eval.accuracy,
                        kappa=report.kappa if report else None,
                        lr=lr,
                        step_ms=sum(step_ms) / len(step_ms) if cfg.metrics.record_timing else None,
                        loss_evals=sum(evals) / len(evals),
                        kappa_mode=report.mode if report else None,
                    )
                )
                epochs.set_postfix(loss=f"{train_eval.loss:.4f}", acc=test_eval.accuracy)

        save_checkpoint(state, self.output_dir / "checkpoint.json")
        report = self._measure(state, train)
        val_eval = evaluate(state, splits.val.batch) if splits.val is not None else None
        result = TrainResult(
            state=state,
            epochs=cfg.epochs,
            steps=step,
            train_loss=train_eval.loss,
            test_loss=test_eval.loss,
            test_acc=test_eval.accuracy,
            val_loss=val_eval.loss if val_eval else None,
            val_acc=val_eval.accuracy if val_eval else None,
            kappa=report.kappa,
            kappa_mode=report.mode,
            regularizer=regularizer.kind,
        )
        summary = json.dumps(result.summary(), indent=2, sort_keys=True) + "\n"
        (self.output_dir / "summary.json").write_text(summary, encoding="utf-8")
        logger.info("finished %d steps: test loss %.4f, κ %.6g (%s)", step, result.test_loss, result.kappa, result.kappa_mode)
        return result


def train(cfg: RunConfig, *, progress: bool = True) -> TrainResult:
    return Trainer(cfg, progress=progress).train()
