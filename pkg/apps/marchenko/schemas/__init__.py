from .report import (
    DeviationSummary,
    ForwardReport,
    GridSummary,
    ReconstructReport,
    RoundtripReport,
    RunReport,
    TailFitReport,
)
from .requests import BoundStateRow, CommandResponse, PhaseShiftRow, ReconstructRequest, RunRequest
