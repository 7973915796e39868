"""
Error hierarchy shared by the services, the CLI and the HTTP routes.

Every error carries the pipeline stage it was raised in so the front ends can
report `[stage] message` without inspecting the exception type.
"""
from typing import Any, Dict, Optional


class MarchenkoError(Exception):
    """Base class for every error raised by the toolkit."""

    stage: str = "pipeline"

    def __init__(self, message: str, stage: Optional[str] = None, **diagnostics: Any):
        super().__init__(message)
        self.message = message
        if stage is not None:
            self.stage = stage
        self.diagnostics: Dict[str, Any] = diagnostics

    def __str__(self) -> str:
        return f"[{self.stage}] {self.message}"

    def to_dict(self) -> Dict[str, Any]:
        return {"stage": self.stage, "error": type(self).__name__, "message": self.message, **self.diagnostics}


class ConfigError(MarchenkoError):
    stage = "config"


class InputDataError(MarchenkoError):
    """Malformed or inconsistent input tables."""
    stage = "scatdata"


class DomainError(MarchenkoError, ValueError):
    """Argument outside the mathematical domain of an operation."""
    stage = "domain"


class FitError(MarchenkoError):
    stage = "tail-fit"


class QuadratureError(MarchenkoError):
    """Fourier-coefficient integrals did not converge after max refinement."""
    stage = "kernelgen"


class InversionError(MarchenkoError):
    """Singular or ill-conditioned Marchenko system."""
    stage = "marchenko"


class AccuracyError(MarchenkoError):
    """Radial integration step too coarse for the requested accuracy."""
    stage = "forward"
