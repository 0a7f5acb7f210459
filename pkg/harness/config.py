"""
Run configuration.

Config files are JSON; unknown keys are rejected so a typo never silently
falls back to a default. ``RELFLAT_SEED`` overrides the file's seed.
"""

import json
import logging
import os
from pathlib import Path
from typing import Annotated, Any, Literal, Optional, Type, TypeVar, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from errors import ConfigError
from flatness import FlatnessMode
from model import MlpSpec
from optim import OptimConfig

logger = logging.getLogger(__name__)

SEED_ENV = "RELFLAT_SEED"

M = TypeVar("M", bound=BaseModel)


def parse_model(cls: Type[M], data: Any, prefix: str = "") -> M:
    """Validate ``data`` as ``cls``, reporting the first problem as a ConfigError with its field path."""
    try:
        return cls.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        path = ".".join(str(part) for part in (prefix, *first["loc"]) if part != "")
        raise ConfigError(first["msg"], field=path or None) from exc


class SplitOptions(BaseModel):
    """Transforms shared by every dataset kind."""

    model_config = ConfigDict(extra="forbid")

    val_fraction: float = Field(default=0.0, ge=0, lt=1, description="Share of the training data held out for validation")
    test_fraction: float = Field(
        default=0.2, gt=0, lt=1, description="Share held out for testing when no test files are given"
    )
    standardize: bool = Field(default=False, description="Standardize features with training constants")
    label_noise: float = Field(default=0.0, ge=0, le=1, description="Share of training labels flipped")


class TwoMoonsSpec(SplitOptions):
    kind: Literal["two_moons"] = "two_moons"
    n_train: int = Field(default=200, ge=1, description="Training points", json_schema_extra={"example": 200})
    n_val: int = Field(default=0, ge=0, description="Validation points")
    n_test: int = Field(default=1000, ge=1, description="Test points")
    noise: float = Field(default=0.3, ge=0, description="Gaussian noise σ")

    @model_validator(mode="after")
    def _even_total(self) -> "TwoMoonsSpec":
        if (self.n_train + self.n_val + self.n_test) % 2:
            raise ValueError("n_train + n_val + n_test must be even")
        return self


class IdxSpec(SplitOptions):
    kind: Literal["idx"] = "idx"
    train_images: str = Field(..., description="IDX image file", json_schema_extra={"example": "train-images-idx3-ubyte.gz"})
    train_labels: str = Field(..., description="IDX label file")
    test_images: Optional[str] = None
    test_labels: Optional[str] = None
    limit: Optional[int] = Field(default=None, ge=1, description="Keep only the first N training examples")

    @model_validator(mode="after")
    def _paired_test_files(self) -> "IdxSpec":
        if (self.test_images is None) != (self.test_labels is None):
            raise ValueError("test_images and test_labels must be given together")
        return self


class CsvSpec(SplitOptions):
    kind: Literal["csv"] = "csv"
    train_path: str = Field(..., description="Training CSV", json_schema_extra={"example": "train.csv"})
    test_path: Optional[str] = None
    task: Literal["classification", "regression"] = "classification"


DatasetSpec = Annotated[Union[TwoMoonsSpec, IdxSpec, CsvSpec], Field(discriminator="kind")]


class BatchConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    size: int = Field(default=64, description="Minibatch size B", json_schema_extra={"example": 64})
    drop_last: bool = False


class MetricsConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kappa_every: int = Field(default=0, ge=0, description="Measure full-set κ every N epochs (0: only at the end)")
    kappa_mode: FlatnessMode = Field(default="neuronwise", description="Measure used for reported κ")
    kappa_samples: int = Field(default=100, ge=1, description="Probes when the reported κ is estimated")
    per_step: bool = Field(default=False, description="Also write one row per step")
    record_timing: bool = Field(default=False, description="Fill step_ms; makes metrics.csv machine-dependent")


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seed: int = Field(default=0, ge=0, description="Run seed", json_schema_extra={"example": 0})
    epochs: int = Field(default=1, ge=1, description="Training epochs T")
    divergence_factor: Optional[float] = Field(
        default=100.0,
        gt=1.0,
        description="Stop when the training loss exceeds this multiple of its initial value; null disables",
    )
    output_dir: str = Field(default="runs/default", description="Where metrics, checkpoint and reports go")
    dataset: DatasetSpec = Field(default_factory=TwoMoonsSpec)
    model: MlpSpec
    optim: OptimConfig = Field(default_factory=OptimConfig)
    batch: BatchConfig = Field(default_factory=BatchConfig)
    metrics: MetricsConfig = Field(default_factory=MetricsConfig)


def read_json(path: Union[str, Path]) -> Any:
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc


def seed_override() -> Optional[int]:
    raw = os.getenv(SEED_ENV)
    if raw is None or raw.strip() == "":
        return None
    try:
        seed = int(raw)
    except ValueError as exc:
        raise ConfigError(f"expected a non-negative integer, got {raw!r}", field=SEED_ENV) from exc
    if seed < 0:
        raise ConfigError(f"expected a non-negative integer, got {raw!r}", field=SEED_ENV)
    return seed


def apply_env(cfg: RunConfig) -> RunConfig:
    seed = seed_override()
    if seed is None or seed == cfg.seed:
        return cfg
    logger.info("%s=%d overrides config seed %d", SEED_ENV, seed, cfg.seed)
    return cfg.model_copy(update={"seed": seed})


def load_run_config(path: Union[str, Path]) -> RunConfig:
    """Parse a run config file and apply environment overrides."""
    return apply_env(parse_model(RunConfig, read_json(path)))


def dump_config(cfg: BaseModel) -> str:
    return json.dumps(cfg.model_dump(mode="json", by_alias=True), indent=2, sort_keys=True) + "\n"
