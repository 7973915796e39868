import math
from typing import Annotated, List, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from apps.marchenko.models.kernel import KernelGrid
from apps.marchenko.models.kinematics import Kinematics


class ExponentialWell(BaseModel):
    """V(r) = V0 exp(-a r), fm^-2. Truncated where |V| drops below cutoff*|V0|."""

    kind: Literal["exponential"] = "exponential"
    v0_re: float = -3.0
    v0_im: float = 0.0
    a: float = Field(default=1.5, gt=0)
    cutoff: float = Field(default=1e-12, gt=0, lt=1)

    model_config = ConfigDict(frozen=True)

    @property
    def v0(self) -> complex:
        return complex(self.v0_re, self.v0_im)

    @property
    def support_radius(self) -> float:
        if self.v0 == 0:
            return 0.0
        return math.log(1.0 / self.cutoff) / self.a

    def breakpoints(self) -> List[float]:
        return []

    def evaluate(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return np.where(r <= self.support_radius, self.v0 * np.exp(-self.a * r), 0.0 + 0.0j)


class SquareWell(BaseModel):
    """V(r) = V0 for r <= width, 0 beyond."""

    kind: Literal["square"] = "square"
    v0_re: float = -2.0
    v0_im: float = 0.0
    width: float = Field(default=1.0, gt=0)

    model_config = ConfigDict(frozen=True)

    @property
    def v0(self) -> complex:
        return complex(self.v0_re, self.v0_im)

    @property
    def support_radius(self) -> float:
        return self.width if self.v0 != 0 else 0.0

    def breakpoints(self) -> List[float]:
        return [self.width]

    def evaluate(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return np.where(r <= self.width, self.v0, 0.0 + 0.0j)


class TabulatedPotential(BaseModel):
    """Piecewise-linear potential through (r, V) nodes in fm^-2, zero beyond the last node."""

    kind: Literal["tabulated"] = "tabulated"
    r: List[float]
    v_re: List[float]
    v_im: List[float]

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_nodes(self):
        if not (len(self.r) == len(self.v_re) == len(self.v_im)) or len(self.r) < 2:
            raise ValueError("tabulated potential needs at least two nodes with matching columns")
        if np.any(np.diff(self.r) <= 0) or self.r[0] < 0:
            raise ValueError("tabulated radii must be non-negative and strictly increasing")
        return self

    @property
    def support_radius(self) -> float:
        v = np.abs(np.asarray(self.v_re) + 1j * np.asarray(self.v_im))
        if not np.any(v > 0):
            return 0.0
        return float(self.r[-1])

    def breakpoints(self) -> List[float]:
        return list(self.r)

    def evaluate(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        re = np.interp(r, self.r, self.v_re, left=self.v_re[0], right=0.0)
        im = np.interp(r, self.r, self.v_im, left=self.v_im[0], right=0.0)
        return np.where(r <= self.r[-1], re + 1j * im, 0.0 + 0.0j)


PotentialSpec = Annotated[Union[ExponentialWell, SquareWell, TabulatedPotential], Field(discriminator="kind")]


class PotentialGrid(BaseModel):
    """Potential on r_p = p*h, complex MeV."""

    r: np.ndarray
    v_mev: np.ndarray
    kinematics: Kinematics = Field(default_factory=Kinematics)

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @model_validator(mode="after")
    def check_lengths(self):
        if self.r.shape != self.v_mev.shape:
            raise ValueError("r and V must have the same length")
        return self

    @property
    def v_fm2(self) -> np.ndarray:
        return self.kinematics.to_fm2(self.v_mev)


class TranslationTable(BaseModel):
    """P_{p,k} = P_k(p h): row p holds the expansion of L(ph, y) on the triangular basis."""

    grid: KernelGrid
    values: np.ndarray
    condition_numbers: np.ndarray

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @property
    def diagonal(self) -> np.ndarray:
        return np.diagonal(self.values).copy()


class WaveSolution(BaseModel):
    """Regular solution of the radial equation at one momentum."""

    q: float
    r: np.ndarray
    u: np.ndarray
    s_matrix: complex
    delta_c: complex

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)
