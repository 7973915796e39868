"""
Scattering-data ingestion and the continuous S-matrix model.

Tabulated phase shifts (and inelasticities) are unwrapped, interpolated on
[0, q_edge] and completed beyond the last datum either by a least-squares
c1/q + c2/q^2 + c3/q^3 tail or by the asymptotic form
S ~ exp(-2i(A/q + B/q^3)), whose two coefficients are matched to the value
and slope of the interpolant at the edge.
The model then evaluates the split S-matrix S = S_u + S_n and the
Marchenko input Y_u on the positive momentum axis.
"""
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.interpolate import PchipInterpolator, make_interp_spline

from apps.marchenko.models import (
    BoundState,
    InterpolantKind,
    Kinematics,
    PhaseShiftSample,
    SMatrixMode,
    TailCoefficients,
    TailFit,
    TailMode,
    tlab_to_momentum,
)
from common.exceptions import DomainError, FitError, InputDataError
from common.utils.csv_io import read_table, write_table

logger = logging.getLogger(__name__)

ArrayLike = Union[float, Sequence[float], np.ndarray]

# rho below this counts as zero when the mode is inferred (radians)
RHO_TOLERANCE = 1e-6
_MIN_COS2 = 1e-300


def odd_power_tail(q_edge: float, value: float, slope: float) -> Tuple[float, float]:
    """(A, B) such that f(q) = -A/q - B/q^3 has the given value and slope at q_edge."""
    b = 0.5 * q_edge ** 2 * (q_edge * value + q_edge ** 2 * slope)
    a = -q_edge * value - b / q_edge ** 2
    return a, b


def unwrap_phase(delta: np.ndarray) -> np.ndarray:
    """Remove jumps of pi between neighbouring phase shifts."""
    return np.unwrap(2.0 * np.asarray(delta, dtype=float)) / 2.0


def fit_tail(
    q: np.ndarray,
    delta: np.ndarray,
    rho: np.ndarray,
    q_min_fit: float,
    q_max_fit: Optional[float] = None,
) -> TailFit:
    """Least-squares fit of c1/q + c2/q^2 + c3/q^3 to delta and rho on the fit window."""
    q = np.asarray(q, dtype=float)
    mask = q >= q_min_fit
    if q_max_fit is not None:
        mask &= q <= q_max_fit
    mask &= q > 0
    n_points = int(mask.sum())
    if n_points == 0:
        raise FitError(f"no samples in fit window q >= {q_min_fit}")
    if n_points < 3:
        raise FitError(f"fit window holds {n_points} sample(s); three coefficients need at least 3")

    qw = q[mask]
    design = np.column_stack([1.0 / qw, 1.0 / qw ** 2, 1.0 / qw ** 3])
    fits = []
    for name, values in (("delta", np.asarray(delta)[mask]), ("rho", np.asarray(rho)[mask])):
        coeffs, _, rank, _ = np.linalg.lstsq(design, values, rcond=None)
        if rank < 3:
            raise FitError(f"{name} tail fit is rank deficient (rank {rank}) on {n_points} samples")
        rms = float(np.sqrt(np.mean((design @ coeffs - values) ** 2)))
        fits.append((TailCoefficients(c1=coeffs[0], c2=coeffs[1], c3=coeffs[2]), rms))

    tail = TailFit(
        delta=fits[0][0], rho=fits[1][0], q_min_fit=q_min_fit,
        n_points=n_points, rms_delta=fits[0][1], rms_rho=fits[1][1],
    )
    logger.info("Tail fit on %d samples above q=%.3f fm^-1: %s", n_points, q_min_fit, "; ".join(tail.describe()))
    return tail


class SMatrixModel:
    """Continuous delta(q), rho(q) on (0, inf) and the split S-matrix built from them."""

    def __init__(
        self,
        q: np.ndarray,
        delta: np.ndarray,
        rho: np.ndarray,
        bound_states: Sequence[BoundState],
        mode: SMatrixMode,
        tail_mode: TailMode,
        tail: Optional[TailFit],
        interpolant: InterpolantKind,
        samples: Sequence[PhaseShiftSample] = (),
    ):
        self.q = q
        self.delta = delta
        self.rho = rho
        self.samples = list(samples)
        self.bound_states = list(bound_states)
        self.mode = mode
        self.tail_mode = tail_mode
        self.tail = tail
        self.interpolant = interpolant

        self._delta_interp = self._make_interpolant(q, delta)
        self._rho_interp = self._make_interpolant(q, rho) if mode == SMatrixMode.OPTICAL else None

        self.q_edge = float(q[-1])
        self.delta_edge = float(self._delta_interp(self.q_edge))
        self.rho_edge = float(self._rho_interp(self.q_edge)) if self._rho_interp is not None else 0.0
        # delta ~ -A/q - B/q^3, C1 at the data edge
        delta_slope = float(self._delta_interp.derivative()(self.q_edge))
        self.A, self.B = odd_power_tail(self.q_edge, self.delta_edge, delta_slope)
        # ln cos^2 rho = ln|S| follows the same odd-power law
        if self._rho_interp is not None:
            rho_slope = float(self._rho_interp.derivative()(self.q_edge))
            log_abs = float(np.log(max(np.cos(self.rho_edge) ** 2, _MIN_COS2)))
            log_abs_slope = -2.0 * np.tan(self.rho_edge) * rho_slope
            self._log_abs_tail = odd_power_tail(self.q_edge, log_abs, log_abs_slope)
        else:
            self._log_abs_tail = (0.0, 0.0)

        if tail_mode == TailMode.FIT:
            if tail is None:
                raise FitError("fit tail mode requires a TailFit")
            self._delta_offset = self.delta_edge - float(tail.delta(self.q_edge))
            self._rho_offset = self.rho_edge - float(tail.rho(self.q_edge))
        else:
            self._delta_offset = self._rho_offset = 0.0

    def _make_interpolant(self, q, values):
        if self.interpolant == InterpolantKind.PCHIP:
            return PchipInterpolator(q, values, extrapolate=False)
        return make_interp_spline(q, values, k=2)

    @property
    def is_optical(self) -> bool:
        return self.mode == SMatrixMode.OPTICAL

    def _tail_delta(self, q):
        if self.tail_mode == TailMode.ASYMPTOTIC:
            return -self.A / q - self.B / q ** 3
        return self.tail.delta(q) + self._delta_offset * self.q_edge / q

    def _tail_rho(self, q):
        if self.tail_mode == TailMode.ASYMPTOTIC:
            a, b = self._log_abs_tail
            log_abs = np.minimum(-a / q - b / q ** 3, 0.0)
            return np.arccos(np.sqrt(np.exp(log_abs)))
        return self.tail.rho(q) + self._rho_offset * self.q_edge / q

    def phase(self, q: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
        """delta(q), rho(q) in radians; q must be positive."""
        q = np.asarray(q, dtype=float)
        if np.any(~(q > 0)):
            raise DomainError("S-matrix model is evaluated on q > 0 only", stage="scatdata")
        inside = q <= self.q_edge
        q_in = np.where(inside, q, self.q_edge)
        q_out = np.where(inside, self.q_edge, q)

        delta = np.where(inside, self._delta_interp(q_in), self._tail_delta(q_out))
        if self._rho_interp is None:
            rho = np.zeros_like(delta)
        else:
            rho = np.where(inside, self._rho_interp(q_in), self._tail_rho(q_out))
            rho = np.clip(rho, 0.0, np.pi / 2)
        return delta, rho

    def pole_term(self, q: ArrayLike) -> np.ndarray:
        """-i * sum_j M_j^2 / (q - i kappa_j)."""
        q = np.asarray(q, dtype=float)
        term = np.zeros(q.shape, dtype=complex)
        for state in self.bound_states:
            term += -1j * state.m2 / (q - 1j * state.kappa)
        return term

    def split_s(self, q: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
        delta, rho = self.phase(q)
        s_u = np.exp(2j * delta)
        s_n = -np.sin(rho) ** 2 * s_u
        return s_u, s_n

    def absorption_weights(self, q: ArrayLike) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """e^{2i delta}, sin^2 rho and cos^2 rho on the positive axis."""
        delta, rho = self.phase(q)
        return np.exp(2j * delta), np.sin(rho) ** 2, np.cos(rho) ** 2

    def yu(self, q: ArrayLike) -> np.ndarray:
        s_u, _ = self.split_s(q)
        return 1.0 - s_u + self.pole_term(q)

    def describe(self) -> dict:
        return {
            "mode": self.mode.value,
            "interpolant": self.interpolant.value,
            "tail_mode": self.tail_mode.value,
            "n_samples": int(len(self.q)),
            "q_edge": self.q_edge,
            "A": self.A,
            "B": self.B,
            "tail": self.tail.model_dump() if self.tail is not None else None,
            "bound_states": [b.model_dump() for b in self.bound_states],
        }


def build_smatrix_model(
    samples: Sequence[PhaseShiftSample],
    bound_states: Sequence[BoundState] = (),
    tail_mode: TailMode = TailMode.ASYMPTOTIC,
    fit_window: Tuple[float, Optional[float]] = (3.0, None),
    mode: Optional[SMatrixMode] = None,
    interpolant: InterpolantKind = InterpolantKind.QUADRATIC,
) -> SMatrixModel:
    """Build the continuous S-matrix model from ordered samples.

    The mode defaults to optical whenever any sample carries rho above
    RHO_TOLERANCE; smaller values are rounding and are dropped in unitary mode.
    """
    if len(samples) < 3:
        raise InputDataError(f"need at least 3 samples, got {len(samples)}")
    q = np.array([s.q for s in samples], dtype=float)
    if np.any(np.diff(q) <= 0):
        bad = int(np.argmax(np.diff(q) <= 0))
        raise InputDataError(f"momenta must be strictly increasing (q[{bad}]={q[bad]}, q[{bad + 1}]={q[bad + 1]})")

    delta = unwrap_phase([s.delta for s in samples])
    rho = np.array([s.rho for s in samples], dtype=float)
    has_rho = bool(np.any(rho > RHO_TOLERANCE))
    if mode is None:
        mode = SMatrixMode.OPTICAL if has_rho else SMatrixMode.UNITARY
    elif mode == SMatrixMode.UNITARY and has_rho:
        raise InputDataError("unitary mode requested but the data carry nonzero rho")
    if mode == SMatrixMode.UNITARY:
        rho = np.zeros_like(rho)

    tail = None
    if tail_mode == TailMode.FIT:
        tail = fit_tail(q, delta, rho, fit_window[0], fit_window[1])

    if q[0] > 0:
        origin = np.pi * np.round(delta[0] / np.pi)
        q = np.concatenate([[0.0], q])
        delta = np.concatenate([[origin], delta])
        rho = np.concatenate([[0.0], rho])
    else:
        delta[0] = np.pi * np.round(delta[0] / np.pi)

    model = SMatrixModel(
        q=q, delta=delta, rho=rho, bound_states=bound_states, mode=mode,
        tail_mode=tail_mode, tail=tail, interpolant=interpolant, samples=samples,
    )
    logger.info(
        "S-matrix model: %d samples up to q=%.3f fm^-1, mode=%s, tail=%s, %d bound state(s)",
        len(samples), model.q_edge, mode.value, tail_mode.value, len(model.bound_states),
    )
    return model


def eval_S(model: SMatrixModel, q: ArrayLike) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (S, S_u, S_n) with S = S_u + S_n = cos^2(rho) e^{2i delta}."""
    s_u, s_n = model.split_s(q)
    return s_u + s_n, s_u, s_n


def eval_Yu(model: SMatrixModel, q: ArrayLike) -> np.ndarray:
    return model.yu(q)


# --- file ingestion -------------------------------------------------------

def samples_from_frame(frame: pd.DataFrame, kin: Kinematics) -> List[PhaseShiftSample]:
    """Convert a degrees/MeV table to radians/fm^-1 samples."""
    if "q_invfm" not in frame.columns and "Tlab_MeV" not in frame.columns:
        raise InputDataError("phase-shift table needs a 'Tlab_MeV' or 'q_invfm' column")
    if "delta_deg" not in frame.columns:
        raise InputDataError("phase-shift table needs a 'delta_deg' column")

    try:
        if "q_invfm" in frame.columns:
            q = frame["q_invfm"].to_numpy(dtype=float)
        else:
            q = tlab_to_momentum(frame["Tlab_MeV"].to_numpy(dtype=float), kin)
        delta = np.deg2rad(frame["delta_deg"].to_numpy(dtype=float))
        if "rho_deg" in frame.columns:
            rho = np.deg2rad(frame["rho_deg"].fillna(0.0).to_numpy(dtype=float))
        else:
            rho = np.zeros_like(delta)
        return [PhaseShiftSample(q=float(a), delta=float(b), rho=float(c)) for a, b, c in zip(q, delta, rho)]
    except (ValueError, TypeError) as e:
        raise InputDataError(f"invalid phase-shift sample: {e}") from e


def load_phase_shifts(path: Union[str, Path], kin: Kinematics) -> List[PhaseShiftSample]:
    try:
        frame = read_table(path)
        samples = samples_from_frame(frame, kin)
    except (OSError, KeyError, pd.errors.ParserError) as e:
        raise InputDataError(f"cannot read phase-shift file {path}: {e}") from e
    logger.info("Loaded %d phase-shift samples from %s", len(samples), path)
    return samples


def load_bound_states(path: Union[str, Path]) -> List[BoundState]:
    try:
        frame = read_table(path, required=("kappa_invfm", "M2_invfm"))
        return [
            BoundState(kappa=float(k), m2=float(m))
            for k, m in zip(frame["kappa_invfm"], frame["M2_invfm"])
        ]
    except (OSError, KeyError, ValueError, pd.errors.ParserError) as e:
        raise InputDataError(f"cannot read bound-state file {path}: {e}") from e


def samples_to_frame(samples: Iterable[PhaseShiftSample]) -> pd.DataFrame:
    samples = list(samples)
    return pd.DataFrame({
        "q_invfm": [s.q for s in samples],
        "delta_deg": np.rad2deg([s.delta for s in samples]),
        "rho_deg": np.rad2deg([s.rho for s in samples]),
    })


def write_phase_shifts(path: Union[str, Path], samples: Iterable[PhaseShiftSample], header_lines=()) -> Path:
    return write_table(path, samples_to_frame(samples), header_lines)
