import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from common.exceptions import DomainError

# hbar2_over_m may differ from hbarc^2/M by this relative amount
UNIT_TOLERANCE = 1e-3


def check_unit_consistency(nucleon_mass: float, hbarc: float, hbar2_over_m: float) -> None:
    expected = hbarc ** 2 / nucleon_mass
    if abs(hbar2_over_m - expected) > UNIT_TOLERANCE * expected:
        raise ValueError(
            f"hbar2_over_m={hbar2_over_m} disagrees with hbarc^2/M={expected:.4f} by more than 0.1%"
        )


class Kinematics(BaseModel):
    """Two-nucleon unit system. Potentials are fm^-2 internally and MeV at the boundary."""

    nucleon_mass: float = Field(default=938.919, gt=0, description="Nucleon mass, MeV")
    hbarc: float = Field(default=197.327, gt=0, description="hbar*c, MeV fm")
    hbar2_over_m: float = Field(default=41.47, gt=0, description="hbar^2/M, MeV fm^2")

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def check_consistency(self):
        check_unit_consistency(self.nucleon_mass, self.hbarc, self.hbar2_over_m)
        return self

    def to_mev(self, v_fm2):
        return v_fm2 * self.hbar2_over_m

    def to_fm2(self, v_mev):
        return v_mev / self.hbar2_over_m

    def momentum_to_tlab(self, q):
        """Inverse of tlab_to_momentum."""
        return 2.0 * (np.asarray(q) * self.hbarc) ** 2 / self.nucleon_mass

    def binding_energy(self, kappa: float) -> float:
        """Bound-state energy in MeV for a pole at q = i*kappa."""
        return -kappa ** 2 * self.hbar2_over_m


def tlab_to_momentum(t_lab, kin: Kinematics):
    """CM momentum (fm^-1) for lab kinetic energy T_lab (MeV), equal-mass kinematics.

    Relativistic and non-relativistic equal-mass kinematics give the same
    q = sqrt(M T_lab / 2) / hbar c, so no choice is needed here.
    """
    t = np.asarray(t_lab, dtype=float)
    if np.any(~(t >= 0)):
        raise DomainError(f"T_lab must be non-negative, got {t_lab}", stage="scatdata")
    q = np.sqrt(kin.nucleon_mass * t / 2.0) / kin.hbarc
    return float(q) if q.ndim == 0 else q
