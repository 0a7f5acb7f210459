"""
Baseline / FAM / SAM comparison on a noisy two-moons task.

For every seed the baseline is trained once, FAM once per λ and SAM once
per ρ; the FAM and SAM settings with the best validation accuracy are
selected and compared with the baseline on the test split and on the final
full-training-set κ.
"""

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator
from tqdm import tqdm

from errors import TrainingDivergedError
from flatness import FlatnessConfig, FlatnessMode
from model import MlpSpec
from optim import CosineSchedule, FamRegularizer, NoRegularizer, OptimConfig, SamRegularizer

from .config import BatchConfig, MetricsConfig, RunConfig, TwoMoonsSpec, parse_model, read_json
from .trainer import TrainResult, train

logger = logging.getLogger(__name__)

COMPARISON_COLUMNS = (
    "seed",
    "method",
    "param",
    "selected",
    "diverged",
    "val_acc",
    "test_acc",
    "test_loss",
    "kappa",
)


def _study_dataset() -> TwoMoonsSpec:
    return TwoMoonsSpec(n_train=200, n_val=100, n_test=1000, noise=0.3, label_noise=0.1)


def _study_model() -> MlpSpec:
    return MlpSpec(widths=[2, 32, 16, 2], activation="tanh", loss="cross_entropy")


def _study_optim() -> OptimConfig:
    return OptimConfig(lr=0.03, momentum=0.9, weight_decay=5e-4, schedule=CosineSchedule())


def _study_flatness() -> FlatnessConfig:
    return FlatnessConfig(mode="trace-hutchinson", samples=10)


class StudyConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seeds: List[int] = Field(default_factory=lambda: [0, 1, 2, 3, 4], min_length=1)
    epochs: int = Field(default=300, ge=1)
    output_dir: str = Field(default="runs/study")
    dataset: TwoMoonsSpec = Field(default_factory=_study_dataset)
    model: MlpSpec = Field(default_factory=_study_model)
    optim: OptimConfig = Field(default_factory=_study_optim, description="Shared optimizer; its regularizer is replaced")
    batch: BatchConfig = Field(default_factory=BatchConfig)
    lambdas: List[float] = Field(default_factory=lambda: [0.01, 0.1, 1.0], min_length=1)
    rhos: List[float] = Field(default_factory=lambda: [0.01, 0.05], min_length=1)
    flatness: FlatnessConfig = Field(
        default_factory=_study_flatness, description="FAM settings; λ comes from ``lambdas``"
    )
    kappa_mode: FlatnessMode = Field(default="neuronwise", description="Measure for the final κ comparison")

    @model_validator(mode="after")
    def _needs_validation(self) -> "StudyConfig":
        if self.dataset.n_val < 1:
            raise ValueError("the study selects λ and ρ on a validation split; set dataset.n_val >= 1")
        return self


@dataclass
class StudyRow:
    seed: int
    method: str
    param: Optional[float]
    selected: bool
    val_acc: Optional[float]
    test_acc: Optional[float]
    test_loss: Optional[float]
    kappa: Optional[float]
    diverged: bool = False


def load_study_config(path: Union[str, Path]) -> StudyConfig:
    return parse_model(StudyConfig, read_json(path))


class Study:
    def __init__(self, cfg: StudyConfig, *, progress: bool = True):
        self.cfg = cfg
        self.output_dir = Path(cfg.output_dir)
        self.progress = progress

    def _run(self, seed: int, name: str, optim: OptimConfig) -> TrainResult:
        cfg = self.cfg
        run = RunConfig(
            seed=seed,
            epochs=cfg.epochs,
            output_dir=str(self.output_dir / f"seed{seed}" / name),
            dataset=cfg.dataset,
            model=cfg.model,
            optim=optim,
            batch=cfg.batch,
            metrics=MetricsConfig(kappa_mode=cfg.kappa_mode),
        )
        return train(run, progress=False)

    def _candidate(self, seed: int, method: str, param: Optional[float], name: str, optim: OptimConfig) -> StudyRow:
        try:
            result = self._run(seed, name, optim)
        except TrainingDivergedError as exc:
            logger.warning("seed %d: %s diverged (%s); dropped from selection", seed, name, exc)
            return StudyRow(seed, method, param, False, None, None, None, None, diverged=True)
        return StudyRow(seed, method, param, False, result.val_acc, result.test_acc, result.test_loss, result.kappa)

    def _tuned(self, seed: int, method: str, candidates: List[StudyRow]) -> Optional[StudyRow]:
        finished = [r for r in candidates if not r.diverged]
        if not finished:
            logger.warning("seed %d: every %s setting diverged", seed, method)
            return None
        best = max(finished, key=lambda r: r.val_acc if r.val_acc is not None else -math.inf)
        best.selected = True
        logger.info("seed %d: %s selected %g (val acc %.4f)", seed, method, best.param, best.val_acc)
        return best

    def run(self) -> Dict[str, Any]:
        cfg = self.cfg
        rows: List[StudyRow] = []
        for seed in tqdm(cfg.seeds, desc="seeds", disable=None if self.progress else True):
            plain = cfg.optim.model_copy(update={"regularizer": NoRegularizer()})
            base = self._candidate(seed, "baseline", None, "baseline", plain)
            base.selected = not base.diverged
            rows.append(base)

            fam = []
            for lam in cfg.lambdas:
                flat = cfg.flatness.model_copy(update={"lam": lam})
                optim = cfg.optim.model_copy(update={"regularizer": FamRegularizer(flatness=flat)})
                fam.append(self._candidate(seed, "fam", lam, f"fam-{lam:g}", optim))
            self._tuned(seed, "fam", fam)
            rows.extend(fam)

            sam = []
            for rho in cfg.rhos:
                optim = cfg.optim.model_copy(update={"regularizer": SamRegularizer(rho=rho)})
                sam.append(self._candidate(seed, "sam", rho, f"sam-{rho:g}", optim))
            self._tuned(seed, "sam", sam)
            rows.extend(sam)

        self._write_comparison(rows)
        summary = summarize(rows, cfg.seeds)
        path = self.output_dir / "study_summary.json"
        path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        logger.info("study summary written to %s", path)
        return summary

    def _write_comparison(self, rows: List[StudyRow]) -> None:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        with open(self.output_dir / "comparison.csv", "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(COMPARISON_COLUMNS)
            for r in rows:
                values = asdict(r)
                writer.writerow(["" if values[c] is None else values[c] for c in COMPARISON_COLUMNS])


def _mean(values: List[float]) -> Optional[float]:
    values = [v for v in values if v is not None]
    return sum(values) / len(values) if values else None


def summarize(rows: List[StudyRow], seeds: List[int]) -> Dict[str, Any]:
    """Means of the selected runs plus the accuracy and κ verdicts."""
    selected = [r for r in rows if r.selected]
    by_method: Dict[str, List[StudyRow]] = {}
    for r in selected:
        by_method.setdefault(r.method, []).append(r)
    means = {
        method: {
            "test_acc": _mean([r.test_acc for r in group]),
            "test_loss": _mean([r.test_loss for r in group]),
            "kappa": _mean([r.kappa for r in group]),
            "params": [r.param for r in group],
        }
        for method, group in by_method.items()
    }
    base = {r.seed: r for r in by_method.get("baseline", [])}
    fam = {r.seed: r for r in by_method.get("fam", [])}
    lower = sum(
        1
        for s in seeds
        if s in base and s in fam and None not in (fam[s].kappa, base[s].kappa) and fam[s].kappa < base[s].kappa
    )
    base_acc = means.get("baseline", {}).get("test_acc")
    fam_acc = means.get("fam", {}).get("test_acc")
    return {
        "seeds": list(seeds),
        "means": means,
        "fam_kappa_lower_count": lower,
        "verdicts": {
            "fam_accuracy_within_half_point": (
                fam_acc is not None and base_acc is not None and fam_acc >= base_acc - 0.005
            ),
            "fam_kappa_lower_in_most_seeds": lower >= math.ceil(0.8 * len(seeds)),
        },
    }


def run_study(cfg: StudyConfig, *, progress: bool = True) -> Dict[str, Any]:
    return Study(cfg, progress=progress).run()
