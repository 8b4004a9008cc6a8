# Typing
from typing import List, Literal, Optional
# Pydantic
from pydantic import BaseModel, ConfigDict, Field, model_validator
# Component
from .family_schema import ConfigTailFamily, RegimeTag

# DataType
Question = Literal["passage_rw", "passage_levy", "busy_period", "large_deviation", "prefactor", "classcheck"]
BuiltinSequence = Literal["power", "petrov", "constant", "gaussian"]

_STRICT = ConfigDict(extra = "forbid")


class ModelBlock(BaseModel):
    """Random-walk increment: a tail family moved by shift."""
    model_config = _STRICT
    family :ConfigTailFamily
    shift :float = 0.0


class MG1Block(BaseModel):
    model_config = _STRICT
    arrival_rate :float = Field(gt = 0.0)
    service :ConfigTailFamily


class SequenceBlock(BaseModel):
    """Builtin sequence for the class diagnostics."""
    model_config = _STRICT
    builtin :BuiltinSequence
    exponent :float = 1.5
    gamma :float = Field(default = 0.0, ge = 0.0)
    max_n :int = Field(default = 10000, ge = 20)


class ToleranceConfig(BaseModel):
    model_config = _STRICT
    tilt_tol :float = Field(default = 1e-12, gt = 0.0)
    newton_tol :float = Field(default = 1e-6, gt = 0.0)
    series_tol :float = Field(default = 1e-4, gt = 0.0)
    quad_rel_tol :float = Field(default = 1e-10, gt = 0.0)
    class_tol :float = Field(default = 1e-3, gt = 0.0)
    epsilon :Optional[float] = Field(default = None, gt = 0.0)


class OutputConfig(BaseModel):
    model_config = _STRICT
    directory :Optional[str] = None
    stem :str = "passagetail"


class RunConfig(BaseModel):
    """One CLI run: what is modelled, which question is asked, and how hard to work at it."""
    model_config = _STRICT
    model :Optional[ModelBlock] = None
    mg1 :Optional[MG1Block] = None
    sequence :Optional[SequenceBlock] = None
    regime :Optional[RegimeTag] = None
    question :Question = "passage_rw"
    x :float = Field(default = 0.0, ge = 0.0)
    horizons :List[float] = Field(default_factory = list)
    y_set :List[float] = Field(default_factory = list)
    samples :int = Field(default = 100000, ge = 1)
    seed :int = Field(default = 20240601, ge = 0, lt = 2 ** 64)
    streams :int = Field(default = 1, ge = 1)
    estimator :Literal["plain", "tilted", "conditional"] = "plain"
    curvature :bool = False
    tolerances :ToleranceConfig = Field(default_factory = ToleranceConfig)
    output :OutputConfig = Field(default_factory = OutputConfig)

    @model_validator(mode = "after")
    def _check_blocks(self) -> "RunConfig":
        if self.question == "classcheck":
            if self.sequence is None and self.model is None:
                raise ValueError("A classcheck run needs a sequence block or a lattice model block!")
            return self
        if (self.model is None) == (self.mg1 is None):
            raise ValueError("Exactly one of the model and mg1 blocks must be given!")
        if self.question == "busy_period" and self.mg1 is None:
            raise ValueError("Busy-period questions need an mg1 block!")
        if any(horizon < 0 for horizon in self.horizons):
            raise ValueError("Horizons must be nonnegative!")
        return self
