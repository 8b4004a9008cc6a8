# Typing
from typing import Annotated, Callable, List, Literal, Optional, Union
# Pydantic
from pydantic import BaseModel, ConfigDict, Field, model_validator

# Regime declared by the user, one per large-deviation class
RegimeTag = Literal["HeavyI", "HeavyII", "Cramer", "Intermediate"]
REGIME_TAGS = ("HeavyI", "HeavyII", "Cramer", "Intermediate")

# Tolerance on the normalisation of lattice masses
_MASS_TOLERANCE = 1e-12


class _Family(BaseModel):
    model_config = ConfigDict(frozen = True, extra = "forbid")


class ParetoLike(_Family):
    """Tail (y/c)^{-p} for y >= c, support [c, inf)."""
    family :Literal["pareto"] = "pareto"
    index :float = Field(gt = 1.0)
    scale :float = Field(default = 1.0, gt = 0.0)


class LomaxLike(_Family):
    """Tail (1 + y/c)^{-p} for y >= 0."""
    family :Literal["lomax"] = "lomax"
    index :float = Field(gt = 1.0)
    scale :float = Field(default = 1.0, gt = 0.0)


class WeibullLike(_Family):
    """Tail exp(-c y^beta) for y >= 0 with beta in (0, 1)."""
    family :Literal["weibull"] = "weibull"
    shape :float = Field(gt = 0.0, lt = 1.0)
    rate :float = Field(default = 1.0, gt = 0.0)


class ExponentialFamily(_Family):
    family :Literal["exponential"] = "exponential"
    rate :float = Field(gt = 0.0)


# Heavy laws usable as the base of a tilted tail
HeavyBase = Annotated[Union[ParetoLike, LomaxLike, WeibullLike], Field(discriminator = "family")]


class TiltedHeavy(_Family):
    """Tail exp(-alpha y) * Gbar(y) for y >= 0, Gbar a heavy base tail."""
    family :Literal["tilted_heavy"] = "tilted_heavy"
    alpha :float = Field(gt = 0.0)
    base :HeavyBase


class LatticePMF(_Family):
    """Masses on the points span * offset."""
    family :Literal["lattice"] = "lattice"
    span :float = Field(default = 1.0, gt = 0.0)
    offsets :List[int]
    masses :List[float]

    @model_validator(mode = "after")
    def _check_masses(self) -> "LatticePMF":
        if len(self.offsets) == 0 or len(self.offsets) != len(self.masses):
            raise ValueError("Offsets and masses must be non-empty and of equal length!")
        if len(set(self.offsets)) != len(self.offsets):
            raise ValueError("Lattice offsets must be unique!")
        if any(mass < 0 for mass in self.masses):
            raise ValueError("Lattice masses must be nonnegative!")
        if abs(sum(self.masses) - 1.0) > _MASS_TOLERANCE:
            raise ValueError(f"Lattice masses sum to {sum(self.masses)!r}, not 1!")
        return self


class UserAnalytic(_Family):
    """
    Nonnegative law given by its tail and the log-tail g = -ln tail with derivatives.
    Moments are obtained by quadrature of the tail; the mgf is finite below mgf_domain_sup.
    """
    model_config = ConfigDict(frozen = True, extra = "forbid", arbitrary_types_allowed = True)
    family :Literal["user"] = "user"
    tail :Callable[[float], float]
    log_tail :Callable[[float], float]
    log_tail_prime :Callable[[float], float]
    log_tail_second :Callable[[float], float]
    mgf_domain_sup :float = Field(default = 0.0, ge = 0.0)
    declared_beta :Optional[float] = None


# Families that can be written in a JSON configuration
ConfigTailFamily = Annotated[Union[ParetoLike, LomaxLike, WeibullLike, ExponentialFamily, TiltedHeavy, LatticePMF],
                             Field(discriminator = "family")]
# All families
TailFamily = Union[ParetoLike, LomaxLike, WeibullLike, ExponentialFamily, TiltedHeavy, LatticePMF, UserAnalytic]


class Finding(BaseModel):
    """One advisory sanity-check outcome."""
    model_config = ConfigDict(frozen = True)
    regime :str
    check :str
    passed :bool
    message :str = ""
    suggestion :Optional[str] = None
