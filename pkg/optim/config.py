from typing import Annotated, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator

from flatness import FlatnessConfig


class ConstantSchedule(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["constant"] = "constant"


class CosineSchedule(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["cosine"] = "cosine"
    total: Optional[float] = Field(
        default=None, gt=0, description="Annealing horizon T in epochs; the run length when omitted"
    )


class MultistepSchedule(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["multistep"] = "multistep"
    milestones: List[float] = Field(
        default_factory=lambda: [0.3, 0.6, 0.8],
        description="Fractions of the total epochs after which the rate decays",
        json_schema_extra={"example": [0.3, 0.6, 0.8]},
    )
    factor: float = Field(default=0.2, gt=0, le=1, description="Decay factor applied at each milestone")

    @field_validator("milestones")
    @classmethod
    def _check_milestones(cls, milestones: List[float]) -> List[float]:
        if any(not 0.0 < m < 1.0 for m in milestones):
            raise ValueError("milestones must be fractions in (0, 1)")
        if any(b <= a for a, b in zip(milestones, milestones[1:])):
            raise ValueError("milestones must be strictly increasing")
        return milestones


Schedule = Annotated[
    Union[ConstantSchedule, CosineSchedule, MultistepSchedule],
    Field(discriminator="kind"),
]


class NoRegularizer(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["none"] = "none"


class FamRegularizer(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["fam"] = "fam"
    flatness: FlatnessConfig = Field(default_factory=FlatnessConfig)


class SamRegularizer(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["sam"] = "sam"
    rho: float = Field(default=0.05, gt=0, description="Ascent radius ρ", json_schema_extra={"example": 0.05})


Regularizer = Annotated[
    Union[NoRegularizer, FamRegularizer, SamRegularizer],
    Field(discriminator="kind"),
]


class OptimConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    lr: float = Field(default=0.03, gt=0, description="Initial learning rate", json_schema_extra={"example": 0.03})
    momentum: float = Field(default=0.9, ge=0, lt=1, description="Momentum coefficient")
    weight_decay: float = Field(default=5e-4, ge=0, description="Coupled L2 coefficient")
    nesterov: bool = Field(default=False, description="Use Nesterov momentum")
    schedule: Schedule = Field(default_factory=ConstantSchedule)
    regularizer: Regularizer = Field(default_factory=NoRegularizer)
