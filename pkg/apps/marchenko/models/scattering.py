import math
from enum import Enum
from typing import List

from pydantic import BaseModel, ConfigDict, Field, field_validator


class SMatrixMode(str, Enum):
    """Unitary data carry phase shifts only; optical data add the inelasticity rho."""
    UNITARY = "unitary"
    OPTICAL = "optical"


class TailMode(str, Enum):
    FIT = "fit"                # c1/q + c2/q^2 + c3/q^3 least-squares tail
    ASYMPTOTIC = "asymptotic"  # S(q) ~ exp(-2i(A/q + B/q^3)) beyond the data edge


class InterpolantKind(str, Enum):
    QUADRATIC = "quadratic"
    PCHIP = "pchip"


class OpticalCompletion(str, Enum):
    """How S is continued to negative momenta in optical mode."""
    SPLIT = "split"            # S(-q) = S_u*(q) - S_n*(q)
    RECIPROCAL = "reciprocal"  # S(-q) = 1/S(q)


class PhaseShiftSample(BaseModel):
    """One scattering datum. Angles are radians internally (degrees in files)."""

    q: float = Field(ge=0, allow_inf_nan=False, description="Momentum, fm^-1")
    delta: float = Field(allow_inf_nan=False, description="Phase shift, rad")
    rho: float = Field(default=0.0, allow_inf_nan=False, description="Inelasticity parameter, rad")

    model_config = ConfigDict(frozen=True)

    @field_validator("rho")
    @classmethod
    def validate_rho(cls, v):
        if not -1e-12 <= v <= math.pi / 2 + 1e-12:
            raise ValueError(f"rho must lie in [0, pi/2], got {v}")
        return min(max(v, 0.0), math.pi / 2)


class BoundState(BaseModel):
    """Bound-state pole q = i*kappa with asymptotic normalization M^2 (real only)."""

    kappa: float = Field(gt=0, description="Decay constant, fm^-1")
    m2: float = Field(gt=0, description="Asymptotic constant squared, fm^-1")

    model_config = ConfigDict(frozen=True)


class TailCoefficients(BaseModel):
    c1: float
    c2: float
    c3: float

    model_config = ConfigDict(frozen=True)

    def __call__(self, q):
        return self.c1 / q + self.c2 / q ** 2 + self.c3 / q ** 3


class TailFit(BaseModel):
    """Least-squares tails of delta and rho above q_min_fit."""

    delta: TailCoefficients
    rho: TailCoefficients
    q_min_fit: float = Field(gt=0)
    n_points: int = Field(ge=3)
    rms_delta: float = 0.0
    rms_rho: float = 0.0

    model_config = ConfigDict(frozen=True)

    def describe(self) -> List[str]:
        return [
            f"delta(q) ~ {self.delta.c3:+.5f}/q^3 {self.delta.c2:+.5f}/q^2 {self.delta.c1:+.5f}/q",
            f"rho(q)   ~ {self.rho.c3:+.5f}/q^3 {self.rho.c2:+.5f}/q^2 {self.rho.c1:+.5f}/q",
        ]
