import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class KernelGrid(BaseModel):
    """Radial grid r_p = p*h, p = 0..N, with R = N*h and q_max = pi/h."""

    h: float = Field(gt=0, description="Radial step, fm")
    N: int = Field(ge=2, description="Number of intervals; R = N*h")

    model_config = ConfigDict(frozen=True)

    @classmethod
    def from_range(cls, h: float, R: float) -> "KernelGrid":
        n = round(R / h)
        if abs(n * h - R) > 1e-9 * max(R, 1.0):
            raise ValueError(f"R={R} is not an integer multiple of h={h}")
        return cls(h=h, N=n)

    @property
    def R(self) -> float:
        return self.N * self.h

    @property
    def q_max(self) -> float:
        return math.pi / self.h

    @property
    def r(self) -> np.ndarray:
        return self.h * np.arange(self.N + 1)

    @property
    def k_values(self) -> np.ndarray:
        """Coefficient indices -2N..2N."""
        return np.arange(-2 * self.N, 2 * self.N + 1)


class KernelCoefficients(BaseModel):
    """Values F_{0,k}, k = -2N..2N, of the kernel on the rectangular-wave basis."""

    grid: KernelGrid
    values: np.ndarray
    consistency_defect: float = 0.0
    quadrature_error: float = 0.0
    panels: int = 0

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @model_validator(mode="after")
    def check_shape(self):
        expected = 4 * self.grid.N + 1
        if self.values.shape != (expected,):
            raise ValueError(f"expected {expected} coefficients, got shape {self.values.shape}")
        return self

    def __getitem__(self, k: int) -> complex:
        return complex(self.values[k + 2 * self.grid.N])

    @property
    def nonnegative(self) -> np.ndarray:
        """F_{0,k} for k = 0..2N, the part entering F_{n,j}."""
        return self.values[2 * self.grid.N:]

    @classmethod
    def one_hot(cls, grid: KernelGrid, k0: int, value: complex = 1.0) -> "KernelCoefficients":
        values = np.zeros(4 * grid.N + 1, dtype=complex)
        values[k0 + 2 * grid.N] = value
        return cls(grid=grid, values=values)
