"""
Marchenko kernel coefficients F_{0,k} on the rectangular-wave basis.

On |q| < pi/h the function q*Y(q) is a Fourier series whose coefficients are
the telescoped differences of F_{0,k}.  Using the symmetry of Y between
positive and negative momenta each coefficient becomes a half-range integral

    rhs_k = (h/pi) int_0^{pi/h} q Im(Y_u e^{iqhk}) dq
          + (i h / 2 pi) int_0^{pi/h} q [S_n e^{iqhk} + conj(T e^{iqhk})] dq

where T is the absorptive part of the negative-momentum branch (T = S_n for
the split completion, -tan^2(rho) e^{2i delta} for the reciprocal one).  The
unitary case keeps only the first line.  rhs_{2N+1} = F_{0,2N},
rhs_k = F_{0,k-1} - F_{0,k}, and rhs_{-2N} = -F_{0,-2N} would close the system.
The closure defect F_{0,-2N} + rhs_{-2N} equals the band-limited kernel at
-(2N+1/2)h minus its value at (2N+3/2)h; it is small only when F has decayed
below -2R.

Integrals use composite Simpson on a uniform q grid.  Because the nodes are
q_i = i*pi/(hM), every e^{i q_i h k} is a root of unity and all k are
obtained from one FFT of length 2M.
"""
import logging
from pathlib import Path
from typing import Optional, Protocol, Tuple, Union

import numpy as np
import pandas as pd

from apps.marchenko.models import KernelCoefficients, KernelGrid, OpticalCompletion, SMatrixMode
from common.exceptions import DomainError, QuadratureError
from common.utils.csv_io import write_table

logger = logging.getLogger(__name__)

DEFAULT_SAMPLES_PER_PERIOD = 16
DEFAULT_TOLERANCE = 1e-6
DEFAULT_MAX_REFINEMENTS = 4


class KernelSource(Protocol):
    """Anything that can provide Y_u and the absorption split on q > 0."""

    is_optical: bool

    def yu(self, q: np.ndarray) -> np.ndarray: ...

    def absorption_weights(self, q: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]: ...


def _resolve_mode(source: KernelSource, mode: Optional[SMatrixMode]) -> SMatrixMode:
    if mode is None:
        return SMatrixMode.OPTICAL if source.is_optical else SMatrixMode.UNITARY
    return SMatrixMode(mode)


def simpson_nodes(grid: KernelGrid, panels: int) -> Tuple[np.ndarray, np.ndarray]:
    """Uniform nodes on [0, pi/h] and composite Simpson weights; panels must be even."""
    if panels < 2 or panels % 2:
        raise ValueError(f"Simpson needs an even panel count, got {panels}")
    q = np.linspace(0.0, grid.q_max, panels + 1)
    w = np.full(panels + 1, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return q, w * (grid.q_max / panels) / 3.0


def _integrand_samples(
    source: KernelSource,
    q: np.ndarray,
    mode: SMatrixMode,
    completion: OpticalCompletion,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """q*Y_u, q*S_n and q*T on the nodes; all vanish at q = 0."""
    a = np.zeros(q.shape, dtype=complex)
    b = np.zeros(q.shape, dtype=complex)
    c = np.zeros(q.shape, dtype=complex)
    pos = q > 0
    qp = q[pos]
    a[pos] = qp * source.yu(qp)
    if mode == SMatrixMode.OPTICAL:
        phase, sin2, cos2 = source.absorption_weights(qp)
        b[pos] = -qp * sin2 * phase
        if completion == OpticalCompletion.RECIPROCAL:
            if np.any(cos2 < 1e-12):
                raise DomainError("reciprocal completion is undefined where S vanishes (rho = pi/2)", stage="kernelgen")
            c[pos] = -qp * (sin2 / cos2) * phase
        else:
            c[pos] = b[pos]
    return a, b, c


def _combine(grid: KernelGrid, ga, gb, gc, mode: SMatrixMode):
    rhs = (grid.h / np.pi) * np.imag(ga) + 0j
    if mode == SMatrixMode.OPTICAL:
        rhs = rhs + 1j * grid.h / (2 * np.pi) * (gb + np.conj(gc))
    return rhs


def _rhs_all_at(source, grid, panels, mode, completion) -> np.ndarray:
    """rhs_k for k = -2N..2N+1 with one Simpson rule of the given panel count."""
    q, w = simpson_nodes(grid, panels)
    a, b, c = _integrand_samples(source, q, mode, completion)
    k = np.arange(-2 * grid.N, 2 * grid.N + 2)
    length = 2 * panels
    idx = np.mod(k, length)

    def fourier_sums(g):
        padded = np.zeros(length, dtype=complex)
        padded[: panels + 1] = w * g
        # sum_i g_i exp(2 pi i * i k / L) with L = 2M
        return length * np.fft.ifft(padded)[idx]

    ga = fourier_sums(a)
    if mode == SMatrixMode.OPTICAL:
        return _combine(grid, ga, fourier_sums(b), fourier_sums(c), mode)
    return _combine(grid, ga, None, None, mode)


def _rhs_single_at(source, grid, panels, k, mode, completion) -> complex:
    q, w = simpson_nodes(grid, panels)
    a, b, c = _integrand_samples(source, q, mode, completion)
    e = np.exp(1j * q * grid.h * k)
    ga = np.sum(w * a * e)
    if mode == SMatrixMode.OPTICAL:
        return complex(_combine(grid, ga, np.sum(w * b * e), np.sum(w * c * e), mode))
    return complex(_combine(grid, ga, None, None, mode))


def _initial_panels(grid: KernelGrid, samples_per_period: int) -> int:
    panels = samples_per_period * (2 * grid.N + 1)
    return panels + panels % 2


def _refine(evaluate, grid, samples_per_period, tol, max_refinements, label):
    """Double the panel count until the Simpson error estimate meets tol."""
    panels = _initial_panels(grid, samples_per_period)
    coarse = evaluate(panels)
    err = np.inf
    for _ in range(max_refinements + 1):
        panels *= 2
        fine = evaluate(panels)
        err = float(np.max(np.abs(fine - coarse))) / 15.0
        scale = float(np.max(np.abs(fine)))
        logger.debug("%s: panels=%d error estimate %.3e (scale %.3e)", label, panels, err, scale)
        if err <= tol * max(scale, 1e-300) or scale == 0.0:
            return fine, err, panels
        coarse = fine
    raise QuadratureError(
        f"{label} did not converge: estimated error {err:.3e} above tolerance {tol:.1e} with {panels} panels",
        error_estimate=err, panels=panels,
    )


def fourier_rhs(
    model: KernelSource,
    grid: KernelGrid,
    k: int,
    mode: Optional[SMatrixMode] = None,
    completion: OpticalCompletion = OpticalCompletion.SPLIT,
    samples_per_period: int = DEFAULT_SAMPLES_PER_PERIOD,
    tol: float = DEFAULT_TOLERANCE,
    max_refinements: int = DEFAULT_MAX_REFINEMENTS,
) -> complex:
    """One Fourier-coefficient integral rhs_k, -2N <= k <= 2N+1."""
    if not -2 * grid.N <= k <= 2 * grid.N + 1:
        raise DomainError(f"k={k} outside [-2N, 2N+1] for N={grid.N}", stage="kernelgen")
    mode = _resolve_mode(model, mode)
    value, _, _ = _refine(
        lambda panels: np.asarray(_rhs_single_at(model, grid, panels, k, mode, completion)),
        grid, samples_per_period, tol, max_refinements, f"rhs[{k}]",
    )
    return complex(value)


def assemble_coefficients(
    model: KernelSource,
    grid: KernelGrid,
    mode: Optional[SMatrixMode] = None,
    completion: OpticalCompletion = OpticalCompletion.SPLIT,
    samples_per_period: int = DEFAULT_SAMPLES_PER_PERIOD,
    tol: float = DEFAULT_TOLERANCE,
    max_refinements: int = DEFAULT_MAX_REFINEMENTS,
) -> KernelCoefficients:
    """Solve the telescoping system downward from F_{0,2N}."""
    mode = _resolve_mode(model, mode)
    logger.info("Kernel coefficients: h=%g fm, N=%d, q_max=%.2f fm^-1, mode=%s", grid.h, grid.N, grid.q_max, mode.value)

    rhs, err, panels = _refine(
        lambda p: _rhs_all_at(model, grid, p, mode, completion),
        grid, samples_per_period, tol, max_refinements, "kernel rhs",
    )
    # rhs index i <-> k = i - 2N;  F_{0,k} = sum_{j > k} rhs_j, accumulated from the top
    tail_sums = np.cumsum(rhs[::-1])[::-1]
    values = tail_sums[1:].copy()

    f_max = float(np.max(np.abs(values)))
    closure = abs(values[0] + rhs[0])
    defect = closure / f_max if f_max > 0 else 0.0
    logger.info("Kernel assembled with %d Simpson panels; closure defect %.3e, quadrature error %.3e", panels, defect, err)
    return KernelCoefficients(grid=grid, values=values, consistency_defect=defect, quadrature_error=err, panels=panels)


def synth_Y_from_coefficients(coeffs: KernelCoefficients, q) -> np.ndarray:
    """Y(q) = sum_k F_{0,k} i (e^{-iqh} - 1) e^{-iqhk} / q."""
    q = np.asarray(q, dtype=float)
    h = coeffs.grid.h
    k = coeffs.grid.k_values
    phases = np.exp(-1j * np.multiply.outer(q, k) * h)
    return 1j * (np.exp(-1j * q * h) - 1.0) * (phases @ coeffs.values) / q


class SyntheticKernelSource:
    """Unitary source whose Y is generated from given coefficients."""

    is_optical = False

    def __init__(self, coeffs: KernelCoefficients):
        self.coeffs = coeffs

    def yu(self, q):
        return synth_Y_from_coefficients(self.coeffs, q)

    def absorption_weights(self, q):
        q = np.asarray(q, dtype=float)
        return np.ones(q.shape, dtype=complex), np.zeros(q.shape), np.ones(q.shape)


def direct_kernel(
    model: KernelSource,
    grid: KernelGrid,
    x,
    mode: Optional[SMatrixMode] = None,
    completion: OpticalCompletion = OpticalCompletion.SPLIT,
    panels: int = 20000,
) -> np.ndarray:
    """Band-limited transform (1/2pi) int_{|q|<pi/h} Y(q) s(q) e^{iqx} dq, s = (qh/2)/sin(qh/2).

    F_{0,k} equals direct_kernel((k+1/2)h) - direct_kernel((2N+3/2)h); the sinc
    weight is the transform of the telescoping sum.
    """
    mode = _resolve_mode(model, mode)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    q, w = simpson_nodes(grid, panels + panels % 2)
    half = 0.5 * q * grid.h
    s = np.ones_like(q)
    s[1:] = half[1:] / np.sin(half[1:])
    a, b, c = _integrand_samples(model, q, mode, completion)
    # the samples carry a factor q; divide it back out away from q = 0
    y_u = np.zeros_like(a)
    s_n = np.zeros_like(b)
    t = np.zeros_like(c)
    y_u[1:], s_n[1:], t[1:] = a[1:] / q[1:], b[1:] / q[1:], c[1:] / q[1:]
    if q.size > 1:
        y_u[0] = model.yu(np.array([q[1] * 1e-6]))[0]

    ws = w * s
    out = np.zeros(x.shape, dtype=complex)
    for start in range(0, x.size, 64):
        e = np.exp(1j * np.multiply.outer(x[start:start + 64], q))
        chunk = (1.0 / np.pi) * (np.real(e * y_u) @ ws) + 0j
        if mode == SMatrixMode.OPTICAL:
            chunk += (1.0 / (2 * np.pi)) * ((-s_n * e + np.conj(t * e)) @ ws)
        out[start:start + 64] = chunk
    return out


def coefficients_frame(coeffs: KernelCoefficients) -> pd.DataFrame:
    return pd.DataFrame({
        "k": coeffs.grid.k_values,
        "ReF": coeffs.values.real,
        "ImF": coeffs.values.imag,
    })


def write_coefficients(path: Union[str, Path], coeffs: KernelCoefficients) -> Path:
    header = [
        f"h={coeffs.grid.h!r} N={coeffs.grid.N}",
        f"consistency_defect={coeffs.consistency_defect:.6e} quadrature_error={coeffs.quadrature_error:.6e}",
    ]
    return write_table(path, coefficients_frame(coeffs), header)
