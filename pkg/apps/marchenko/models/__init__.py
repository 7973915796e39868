from .kinematics import Kinematics, check_unit_consistency, tlab_to_momentum
from .scattering import (
    BoundState,
    InterpolantKind,
    OpticalCompletion,
    PhaseShiftSample,
    SMatrixMode,
    TailCoefficients,
    TailFit,
    TailMode,
)
from .kernel import KernelCoefficients, KernelGrid
from .potential import (
    ExponentialWell,
    PotentialGrid,
    PotentialSpec,
    SquareWell,
    TabulatedPotential,
    TranslationTable,
    WaveSolution,
)

__all__ = [
    "Kinematics", "check_unit_consistency", "tlab_to_momentum",
    "BoundState", "InterpolantKind", "OpticalCompletion", "PhaseShiftSample", "SMatrixMode",
    "TailCoefficients", "TailFit", "TailMode",
    "KernelCoefficients", "KernelGrid",
    "ExponentialWell", "PotentialGrid", "PotentialSpec", "SquareWell", "TabulatedPotential",
    "TranslationTable", "WaveSolution",
]
