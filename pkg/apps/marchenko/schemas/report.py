from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

REPORT_SCHEMA_VERSION = 1


class GridSummary(BaseModel):
    h: float
    N: int
    R: float
    q_max: float


class RunReport(BaseModel):
    """Fields shared by every command report; serialized with by_alias=True."""

    schema_version: int = Field(default=REPORT_SCHEMA_VERSION, serialization_alias="schema")
    command: str
    status: Literal["ok", "error"] = "ok"
    config: Dict[str, Any]
    timings: Dict[str, float] = Field(default_factory=dict)
    outputs: List[str] = Field(default_factory=list)
    error: Optional[Dict[str, Any]] = None

    model_config = ConfigDict(populate_by_name=True)

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True, indent=2)


class ForwardReport(RunReport):
    command: Literal["forward"] = "forward"
    potential: Dict[str, Any] = Field(default_factory=dict)
    n_samples: int = 0
    q_range: List[float] = Field(default_factory=list)
    max_unitarity_defect: float = 0.0


class ReconstructReport(RunReport):
    command: Literal["reconstruct"] = "reconstruct"
    grid: Optional[GridSummary] = None
    model: Dict[str, Any] = Field(default_factory=dict)
    consistency_defect: Optional[float] = None
    quadrature_error: Optional[float] = None
    panels: Optional[int] = None
    condition_max: Optional[float] = None
    condition_numbers: List[float] = Field(default_factory=list)
    marchenko_residual: Optional[float] = None
    v0_mev: Optional[List[float]] = None  # [Re, Im] at r = 0
    bound_state_energies_mev: List[float] = Field(default_factory=list)


class DeviationSummary(BaseModel):
    """Deviations over the comparison window, relative to the largest true |V|, Re V, Im V."""

    r_window: List[float]
    max_relative: float
    mean_relative: float
    max_relative_re: float
    mean_relative_re: float
    max_relative_im: float
    mean_relative_im: float
    v0_true_mev: List[float]
    v0_reconstructed_mev: List[float]


class RoundtripReport(ReconstructReport):
    command: Literal["roundtrip"] = "roundtrip"
    forward: Optional[ForwardReport] = None
    deviation: Optional[DeviationSummary] = None


class TailFitReport(RunReport):
    command: Literal["fit-tail"] = "fit-tail"
    tail_fit: Optional[Dict[str, Any]] = None
    describe: List[str] = Field(default_factory=list)
