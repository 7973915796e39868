from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Literal, Mapping, Optional, Union

from dotenv import dotenv_values
from pydantic import Field, ValidationError, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from apps.marchenko.models import (
    ExponentialWell,
    InterpolantKind,
    KernelGrid,
    Kinematics,
    OpticalCompletion,
    SMatrixMode,
    SquareWell,
    TailMode,
    check_unit_consistency,
)
from common.exceptions import ConfigError
from config.settings import get_app_settings


class RunConfig(BaseSettings):
    """Every parameter of a pipeline run. Keys double as config-file keys and CLI flags."""

    # Radial grid
    h: float = Field(default=0.04, gt=0, description="Grid step, fm")
    R: Optional[float] = Field(default=None, gt=0, description="Range, fm (R = N*h)")
    N: Optional[int] = Field(default=None, ge=2, description="Number of grid intervals")

    # Scattering-data model
    mode: Optional[SMatrixMode] = None  # inferred from the rho column when unset
    optical_completion: OpticalCompletion = OpticalCompletion.RECIPROCAL
    interpolant: InterpolantKind = InterpolantKind.QUADRATIC
    tail_mode: TailMode = TailMode.ASYMPTOTIC
    fit_q_min: float = Field(default=3.0, gt=0)
    fit_q_max: Optional[float] = Field(default=None, gt=0)

    # Files
    data_file: Optional[str] = None
    bound_state_file: Optional[str] = None
    potential_file: Optional[str] = None
    out: Optional[str] = None

    # Quadrature and solver
    samples_per_period: int = Field(default=16, ge=4)
    quad_tol: float = Field(default=1e-6, gt=0)
    max_refinements: int = Field(default=4, ge=0)
    condition_limit: float = Field(default=1e6, gt=1)
    workers: int = Field(default_factory=lambda: get_app_settings().DEFAULT_WORKERS, ge=1)

    # Forward potential (fm^-2) and scan
    potential_kind: Literal["exponential", "square", "tabulated"] = "exponential"
    v0_re: float = -3.0
    v0_im: float = 0.0
    a: float = Field(default=1.5, gt=0)
    width: float = Field(default=1.0, gt=0)
    q_min: float = Field(default=0.1, gt=0)
    q_max: float = Field(default=8.0, gt=0)
    q_step: float = Field(default=0.1, gt=0)
    step_fraction: float = Field(default=0.02, gt=0, le=0.1)
    r_extra: float = Field(default=0.0, ge=0)

    # Round-trip comparison window, fm
    compare_r_min: float = Field(default=0.1, ge=0)
    compare_r_max: float = Field(default=3.0, gt=0)

    # Kinematics
    nucleon_mass: float = Field(default=938.919, gt=0)
    hbarc: float = Field(default=197.327, gt=0)
    hbar2_over_m: float = Field(default=41.47, gt=0)

    model_config = SettingsConfigDict(env_prefix="MARCHENKO_", env_file=".env", extra="ignore")

    @model_validator(mode="after")
    def resolve_grid(self):
        if self.R is None and self.N is None:
            self.R = 4.0
        if self.N is None:
            n = round(self.R / self.h)
            if n < 2 or abs(n * self.h - self.R) > 1e-9 * max(self.R, 1.0):
                raise ValueError(f"R={self.R} is not an integer multiple (>= 2) of h={self.h}")
            self.N = n
        elif self.R is None:
            self.R = self.N * self.h
        elif abs(self.N * self.h - self.R) > 1e-9 * max(self.R, 1.0):
            raise ValueError(f"R={self.R} disagrees with N*h={self.N * self.h}")
        if self.q_max <= self.q_min:
            raise ValueError("q_max must exceed q_min")
        if self.compare_r_max <= self.compare_r_min:
            raise ValueError("compare_r_max must exceed compare_r_min")
        check_unit_consistency(self.nucleon_mass, self.hbarc, self.hbar2_over_m)
        return self

    @property
    def grid(self) -> KernelGrid:
        return KernelGrid(h=self.h, N=self.N)

    @property
    def kinematics(self) -> Kinematics:
        return Kinematics(nucleon_mass=self.nucleon_mass, hbarc=self.hbarc, hbar2_over_m=self.hbar2_over_m)

    @property
    def fit_window(self):
        return self.fit_q_min, self.fit_q_max

    def analytic_potential(self) -> Union[ExponentialWell, SquareWell]:
        if self.potential_kind == "square":
            return SquareWell(v0_re=self.v0_re, v0_im=self.v0_im, width=self.width)
        if self.potential_kind == "exponential":
            return ExponentialWell(v0_re=self.v0_re, v0_im=self.v0_im, a=self.a)
        raise ConfigError(f"potential_kind={self.potential_kind} is not analytic")

    def resolved(self) -> Dict[str, Any]:
        """The full configuration as JSON-ready values (embedded in every report)."""
        return self.model_dump(mode="json")

    def to_config_text(self) -> str:
        lines = []
        for key, value in self.resolved().items():
            lines.append(f"{key}={'' if value is None else value}")
        return "\n".join(lines) + "\n"


def _normalize_key(key: str) -> str:
    key = key.strip().replace("-", "_")
    if key in RunConfig.model_fields:
        return key
    lowered = {k.lower(): k for k in RunConfig.model_fields}
    return lowered.get(key.lower(), key)


def read_config_file(path: Union[str, Path]) -> Dict[str, str]:
    """Parse a flat key=value file; blank values mean 'unset'."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} not found")
    raw = dotenv_values(path)
    values = {}
    for key, value in raw.items():
        name = _normalize_key(key)
        if name not in RunConfig.model_fields:
            raise ConfigError(f"{path}: unknown key '{key}'")
        if value is None:
            raise ConfigError(f"{path}: key '{key}' has no '=' assignment")
        if value.strip() != "":
            values[name] = value.strip()
    return values


def load_run_config(
    config_file: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """Resolve a RunConfig. Precedence: overrides > config file > environment > defaults."""
    values: Dict[str, Any] = {}
    if config_file is not None:
        values.update(read_config_file(config_file))
    for key, value in (overrides or {}).items():
        name = _normalize_key(key)
        if name not in RunConfig.model_fields:
            raise ConfigError(f"unknown configuration key '{key}'")
        if value is not None:
            values[name] = value
    try:
        return RunConfig(**values)
    except ValidationError as e:
        details = "; ".join(f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in e.errors())
        raise ConfigError(f"invalid configuration: {details}") from e


@lru_cache()
def get_marchenko_settings() -> RunConfig:
    return RunConfig()
