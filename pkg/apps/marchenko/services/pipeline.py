"""
Command pipelines shared by the CLI and the HTTP routes.

Each command returns a CommandResult: a report (JSON, schema 1, embedding the
resolved config) and a set of named text artifacts.  Artifacts never contain
timestamps or timings so that identical runs give identical files.
"""
import logging
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from apps.marchenko.config import RunConfig
from apps.marchenko.models import (
    BoundState,
    KernelCoefficients,
    PhaseShiftSample,
    PotentialGrid,
    TabulatedPotential,
    TranslationTable,
)
from apps.marchenko.schemas import (
    DeviationSummary,
    ForwardReport,
    GridSummary,
    ReconstructReport,
    RoundtripReport,
    RunReport,
    TailFitReport,
)
from apps.marchenko.services import forward_oracle, kernelgen, marchenko_core, scatdata
from common.exceptions import ConfigError, InputDataError, MarchenkoError
from common.utils.csv_io import format_table, read_table

logger = logging.getLogger(__name__)

PHASE_SHIFTS = "phase_shifts.csv"
POTENTIAL = "potential.csv"
COEFFICIENTS = "coefficients.csv"
COMPARISON = "comparison.csv"
REPORT = "report.json"
TAIL_FIT = "tail_fit.json"


class CommandResult(BaseModel):
    report: RunReport
    artifacts: Dict[str, str] = Field(default_factory=dict)
    primary: str = REPORT

    model_config = ConfigDict(arbitrary_types_allowed=True)

    def write(self, out_dir: Union[str, Path]) -> List[Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        written = []
        for name, text in self.artifacts.items():
            path = out_dir / name
            with open(path, "w", encoding="utf-8", newline="") as f:
                f.write(text)
            written.append(path)
        report_path = out_dir / REPORT
        with open(report_path, "w", encoding="utf-8", newline="") as f:
            f.write(self.report.to_json() + "\n")
        written.append(report_path)
        return written


class _Timer:
    def __init__(self):
        self.timings: Dict[str, float] = {}

    @contextmanager
    def stage(self, name: str):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = round(time.perf_counter() - start, 6)


# --- building blocks -------------------------------------------------------

def q_grid(config: RunConfig) -> np.ndarray:
    n = int(np.floor((config.q_max - config.q_min) / config.q_step + 1e-9)) + 1
    return config.q_min + config.q_step * np.arange(n)


def load_tabulated_potential(path: Union[str, Path], config: RunConfig) -> TabulatedPotential:
    """Read r_fm,ReV_MeV[,ImV_MeV] and convert to fm^-2."""
    try:
        frame = read_table(path, required=("r_fm", "ReV_MeV"))
        kin = config.kinematics
        v_im = frame["ImV_MeV"] if "ImV_MeV" in frame.columns else pd.Series(np.zeros(len(frame)))
        return TabulatedPotential(
            r=frame["r_fm"].astype(float).tolist(),
            v_re=kin.to_fm2(frame["ReV_MeV"].to_numpy(dtype=float)).tolist(),
            v_im=kin.to_fm2(v_im.to_numpy(dtype=float)).tolist(),
        )
    except (OSError, KeyError, ValueError, pd.errors.ParserError) as e:
        raise InputDataError(f"cannot read potential file {path}: {e}", stage="forward") from e


def potential_spec(config: RunConfig):
    if config.potential_kind == "tabulated":
        if not config.potential_file:
            raise ConfigError("potential_kind=tabulated needs potential_file")
        return load_tabulated_potential(config.potential_file, config)
    return config.analytic_potential()


def potential_frame(potential: PotentialGrid) -> pd.DataFrame:
    return pd.DataFrame({
        "r_fm": potential.r,
        "ReV_MeV": potential.v_mev.real,
        "ImV_MeV": potential.v_mev.imag,
    })


def _provenance_header(config: RunConfig, outcome: "ReconstructionOutcome", provenance: str) -> List[str]:
    coeffs = outcome.coefficients
    return [
        "Marchenko reconstruction, s-wave",
        f"data={provenance}",
        f"h={config.h!r} N={config.N} R={config.R!r} q_max={coeffs.grid.q_max:.6f}",
        f"mode={outcome.summary['mode']} tail_mode={config.tail_mode.value} "
        f"completion={config.optical_completion.value} interpolant={config.interpolant.value}",
        f"consistency_defect={coeffs.consistency_defect:.6e}",
    ]


class ReconstructionOutcome(BaseModel):
    summary: Dict
    coefficients: KernelCoefficients
    table: TranslationTable
    potential: PotentialGrid
    residual: float
    bound_states: List[BoundState]

    model_config = ConfigDict(arbitrary_types_allowed=True)


def reconstruct(
    config: RunConfig,
    samples: Sequence[PhaseShiftSample],
    bound_states: Sequence[BoundState] = (),
    timer: Optional[_Timer] = None,
) -> ReconstructionOutcome:
    """data -> S-matrix model -> kernel coefficients -> translation table -> V."""
    timer = timer or _Timer()
    grid = config.grid
    with timer.stage("model"):
        model = scatdata.build_smatrix_model(
            samples, bound_states,
            tail_mode=config.tail_mode, fit_window=config.fit_window,
            mode=config.mode, interpolant=config.interpolant,
        )
    if model.q_edge < grid.q_max:
        logger.info("Data end at q=%.3f fm^-1 below q_max=%.3f; the %s tail covers the rest",
                    model.q_edge, grid.q_max, config.tail_mode.value)
    with timer.stage("kernelgen"):
        coeffs = kernelgen.assemble_coefficients(
            model, grid, mode=model.mode, completion=config.optical_completion,
            samples_per_period=config.samples_per_period, tol=config.quad_tol,
            max_refinements=config.max_refinements,
        )
    with timer.stage("marchenko"):
        F = marchenko_core.build_F_matrix(coeffs)
        table = marchenko_core.solve_translation(F, grid, workers=config.workers, condition_limit=config.condition_limit)
        potential = marchenko_core.extract_potential(table, config.kinematics)
    with timer.stage("residual"):
        residual = marchenko_core.marchenko_residual(coeffs, table, grid)
    logger.info("Reconstructed V(0) = %.4f %+.4fi MeV; Marchenko residual %.3e",
                potential.v_mev[0].real, potential.v_mev[0].imag, residual)
    return ReconstructionOutcome(
        summary=model.describe(), coefficients=coeffs, table=table,
        potential=potential, residual=residual, bound_states=list(bound_states),
    )


def _fill_reconstruct_report(report: ReconstructReport, config: RunConfig, outcome: ReconstructionOutcome) -> None:
    grid = config.grid
    conds = outcome.table.condition_numbers
    report.grid = GridSummary(h=grid.h, N=grid.N, R=grid.R, q_max=grid.q_max)
    report.model = outcome.summary
    report.consistency_defect = outcome.coefficients.consistency_defect
    report.quadrature_error = outcome.coefficients.quadrature_error
    report.panels = outcome.coefficients.panels
    report.condition_max = float(np.max(conds))
    report.condition_numbers = [float(c) for c in conds]
    report.marchenko_residual = outcome.residual
    v0 = outcome.potential.v_mev[0]
    report.v0_mev = [float(v0.real), float(v0.imag)]
    kin = config.kinematics
    report.bound_state_energies_mev = [kin.binding_energy(b.kappa) for b in outcome.bound_states]


def compare_potentials(
    reconstructed: PotentialGrid,
    true_mev: np.ndarray,
    r_min: float,
    r_max: float,
) -> DeviationSummary:
    """Deviation relative to the largest true magnitude; absolute MeV when the true part vanishes."""
    r = reconstructed.r
    window = (r >= r_min - 1e-12) & (r <= r_max + 1e-12)
    if not np.any(window):
        raise ConfigError(f"comparison window [{r_min}, {r_max}] fm holds no grid point")
    rec = reconstructed.v_mev[window]
    ref = true_mev[window]

    def relative(diff, scale):
        scale = scale if scale > 0 else 1.0
        return np.abs(diff) / scale

    full = relative(rec - ref, float(np.max(np.abs(true_mev))))
    re = relative(rec.real - ref.real, float(np.max(np.abs(true_mev.real))))
    im = relative(rec.imag - ref.imag, float(np.max(np.abs(true_mev.imag))))
    return DeviationSummary(
        r_window=[r_min, r_max],
        max_relative=float(full.max()), mean_relative=float(full.mean()),
        max_relative_re=float(re.max()), mean_relative_re=float(re.mean()),
        max_relative_im=float(im.max()), mean_relative_im=float(im.mean()),
        v0_true_mev=[float(true_mev[0].real), float(true_mev[0].imag)],
        v0_reconstructed_mev=[float(reconstructed.v_mev[0].real), float(reconstructed.v_mev[0].imag)],
    )


def _load_data(config: RunConfig):
    if not config.data_file:
        raise ConfigError("reconstruct needs data_file")
    kin = config.kinematics
    samples = scatdata.load_phase_shifts(config.data_file, kin)
    bound_states = scatdata.load_bound_states(config.bound_state_file) if config.bound_state_file else []
    return samples, bound_states


def _forward_scan(config: RunConfig, spec, timer: _Timer):
    q = q_grid(config)
    with timer.stage("forward"):
        s = forward_oracle.scan_s_values(spec, q, config.step_fraction, config.r_extra, config.workers)
        samples = forward_oracle.samples_from_s(spec, q, s)
    logger.info("Forward scan of %s potential: %d momenta up to %.3f fm^-1", spec.kind, len(q), float(q[-1]))
    return q, s, samples


def _forward_summary(spec, q: np.ndarray, s: np.ndarray, samples) -> ForwardReport:
    report = ForwardReport(config={}, potential=spec.model_dump(mode="json"), n_samples=len(samples),
                           q_range=[float(q[0]), float(q[-1])])
    if forward_oracle.is_real_potential(spec):
        report.max_unitarity_defect = float(np.max(np.abs(np.abs(s) - 1.0)))
    return report


# --- commands --------------------------------------------------------------

def cmd_forward(config: RunConfig) -> CommandResult:
    """Phase shifts of the configured potential on the configured q grid."""
    timer = _Timer()
    spec = potential_spec(config)
    q, s, samples = _forward_scan(config, spec, timer)
    report = _forward_summary(spec, q, s, samples)
    report.config = config.resolved()
    report.timings = timer.timings
    header = [f"forward scan of {spec.kind} potential (fm^-2)", f"step_fraction={config.step_fraction!r}"]
    csv_text = format_table(scatdata.samples_to_frame(samples), header)
    report.outputs = [PHASE_SHIFTS]
    return CommandResult(report=report, artifacts={PHASE_SHIFTS: csv_text}, primary=PHASE_SHIFTS)


def cmd_reconstruct(
    config: RunConfig,
    samples: Optional[Sequence[PhaseShiftSample]] = None,
    bound_states: Optional[Sequence[BoundState]] = None,
    provenance: Optional[str] = None,
) -> CommandResult:
    """Full inversion of a phase-shift table; samples default to config.data_file."""
    timer = _Timer()
    report = ReconstructReport(config=config.resolved())
    with timer.stage("ingest"):
        if samples is None:
            samples, file_states = _load_data(config)
            bound_states = file_states if bound_states is None else bound_states
            provenance = provenance or str(config.data_file)
    outcome = reconstruct(config, samples, bound_states or [], timer)
    _fill_reconstruct_report(report, config, outcome)
    report.timings = timer.timings

    header = _provenance_header(config, outcome, provenance or "inline")
    artifacts = {
        POTENTIAL: format_table(potential_frame(outcome.potential), header),
        COEFFICIENTS: format_table(kernelgen.coefficients_frame(outcome.coefficients), header[:3]),
    }
    report.outputs = list(artifacts)
    return CommandResult(report=report, artifacts=artifacts, primary=POTENTIAL)


def cmd_roundtrip(config: RunConfig) -> CommandResult:
    """Forward-scan an analytic potential, invert the scan and compare with the truth."""
    timer = _Timer()
    report = RoundtripReport(config=config.resolved())
    spec = config.analytic_potential()

    q, s, samples = _forward_scan(config, spec, timer)
    report.forward = _forward_summary(spec, q, s, samples)

    outcome = reconstruct(config, samples, (), timer)
    _fill_reconstruct_report(report, config, outcome)

    kin = config.kinematics
    true_mev = kin.to_mev(spec.evaluate(outcome.potential.r))
    report.deviation = compare_potentials(outcome.potential, true_mev, config.compare_r_min, config.compare_r_max)
    report.timings = timer.timings
    logger.info("Round trip: max relative deviation %.3e (Re %.3e, Im %.3e) on [%g, %g] fm",
                report.deviation.max_relative, report.deviation.max_relative_re,
                report.deviation.max_relative_im, config.compare_r_min, config.compare_r_max)

    header = _provenance_header(config, outcome, f"forward:{spec.kind}")
    comparison = potential_frame(outcome.potential)
    comparison["ReV_true_MeV"] = true_mev.real
    comparison["ImV_true_MeV"] = true_mev.imag
    artifacts = {
        PHASE_SHIFTS: format_table(scatdata.samples_to_frame(samples), [f"forward scan of {spec.kind} potential"]),
        POTENTIAL: format_table(potential_frame(outcome.potential), header),
        COMPARISON: format_table(comparison, header),
    }
    report.outputs = list(artifacts)
    return CommandResult(report=report, artifacts=artifacts, primary=REPORT)


def cmd_fit_tail(config: RunConfig, samples: Optional[Sequence[PhaseShiftSample]] = None) -> CommandResult:
    timer = _Timer()
    report = TailFitReport(config=config.resolved())
    with timer.stage("ingest"):
        if samples is None:
            samples, _ = _load_data(config)
    if len(samples) < 3:
        raise InputDataError(f"need at least 3 samples, got {len(samples)}")
    with timer.stage("tail-fit"):
        q = np.array([s.q for s in samples])
        delta = scatdata.unwrap_phase([s.delta for s in samples])
        rho = np.array([s.rho for s in samples])
        tail = scatdata.fit_tail(q, delta, rho, config.fit_q_min, config.fit_q_max)
    report.tail_fit = tail.model_dump()
    report.describe = tail.describe()
    report.timings = timer.timings
    report.outputs = [TAIL_FIT]
    body = tail.model_dump_json(indent=2) + "\n"
    return CommandResult(report=report, artifacts={TAIL_FIT: body}, primary=TAIL_FIT)


COMMANDS = {
    "forward": cmd_forward,
    "reconstruct": cmd_reconstruct,
    "roundtrip": cmd_roundtrip,
    "fit-tail": cmd_fit_tail,
}

_REPORTS = {
    "forward": ForwardReport,
    "reconstruct": ReconstructReport,
    "roundtrip": RoundtripReport,
    "fit-tail": TailFitReport,
}


def error_report(command: str, config: Optional[RunConfig], error: MarchenkoError) -> RunReport:
    report_cls = _REPORTS.get(command, RunReport)
    kwargs = {} if report_cls is not RunReport else {"command": command}
    return report_cls(
        config=config.resolved() if config is not None else {},
        status="error", error=error.to_dict(), **kwargs,
    )


def run_command(command: str, config: RunConfig) -> CommandResult:
    if command not in COMMANDS:
        raise ConfigError(f"unknown command '{command}'")
    logger.info("Running %s", command)
    return COMMANDS[command](config)
