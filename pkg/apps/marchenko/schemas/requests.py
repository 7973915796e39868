from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


class PhaseShiftRow(BaseModel):
    """One table row as uploaded over HTTP; same units as the CSV files."""

    q_invfm: Optional[float] = None
    Tlab_MeV: Optional[float] = None
    delta_deg: float
    rho_deg: float = 0.0


class BoundStateRow(BaseModel):
    kappa_invfm: float
    M2_invfm: float


class RunRequest(BaseModel):
    """Config overrides by key, exactly as accepted on the command line."""

    config: Dict[str, Any] = Field(default_factory=dict)


class ReconstructRequest(RunRequest):
    phase_shifts: List[PhaseShiftRow] = Field(min_length=3)
    bound_states: List[BoundStateRow] = Field(default_factory=list)


class CommandResponse(BaseModel):
    report: Dict[str, Any]
    artifacts: Dict[str, str] = Field(default_factory=dict)
