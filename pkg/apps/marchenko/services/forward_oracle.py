"""
Forward s-wave solver: u'' = (V(r) - q^2) u with u(0) = 0, u'(0) = 1.

The regular solution is propagated with classical fourth-order Runge-Kutta
on a mesh that lands on every breakpoint of the potential, then matched to
A e^{iqr} + B e^{-iqr} where V vanishes; S = -A/B.  Momenta are propagated
together in fixed-size chunks so results do not depend on the worker count.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np

from apps.marchenko.models import PhaseShiftSample, WaveSolution
from apps.marchenko.models.potential import PotentialSpec
from common.exceptions import AccuracyError, DomainError

logger = logging.getLogger(__name__)

DEFAULT_STEP_FRACTION = 0.02   # step * k_local
MAX_STEP_FRACTION = 0.1
CHUNK_SIZE = 64
_NUDGE = 1e-10


def _sampled_potential(spec: PotentialSpec) -> np.ndarray:
    radius = spec.support_radius
    if radius <= 0:
        return np.zeros(1, dtype=complex)
    nodes = np.concatenate([np.linspace(0.0, radius, 2001), np.asarray(spec.breakpoints(), dtype=float)])
    return spec.evaluate(nodes)


def _max_abs_potential(spec: PotentialSpec) -> float:
    return float(np.max(np.abs(_sampled_potential(spec))))


def is_real_potential(spec: PotentialSpec) -> bool:
    return bool(np.all(_sampled_potential(spec).imag == 0.0))


def local_wavenumber(spec: PotentialSpec, q_max: float) -> float:
    return float(np.sqrt(q_max ** 2 + _max_abs_potential(spec)))


def radial_mesh(spec: PotentialSpec, r_match: float, step_max: float) -> np.ndarray:
    """Piecewise-uniform mesh on [0, r_match] containing every breakpoint."""
    edges = [0.0] + sorted(b for b in spec.breakpoints() if 0.0 < b < r_match) + [r_match]
    pieces = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi - lo <= 0:
            continue
        n = max(1, int(np.ceil((hi - lo) / step_max - 1e-12)))
        pieces.append(np.linspace(lo, hi, n + 1)[:-1])
    pieces.append(np.array([r_match]))
    return np.concatenate(pieces)


def _propagate(spec: PotentialSpec, q: np.ndarray, r: np.ndarray, keep_path: bool = False):
    """RK4 for (u, u') on mesh r for every q at once, from u = 0, u' = 1."""
    steps = np.diff(r)
    # stage potentials, nudged into the open step so jumps on nodes take the one-sided value
    v_start = spec.evaluate(r[:-1] + _NUDGE * steps)
    v_mid = spec.evaluate(r[:-1] + 0.5 * steps)
    v_end = spec.evaluate(r[1:] - _NUDGE * steps)
    u = np.zeros(q.shape, dtype=complex)
    du = np.ones(q.shape, dtype=complex)
    return _rk4(q, steps, (v_start, v_mid, v_end), u, du, keep_path)


def _rk4(q, steps, stage_potentials, u, du, keep_path: bool = False):
    v_start, v_mid, v_end = stage_potentials
    q2 = q.astype(complex) ** 2
    path = [u.copy()] if keep_path else None

    for i, s in enumerate(steps):
        half = 0.5 * s
        w0 = v_start[i] - q2
        wm = v_mid[i] - q2
        w1 = v_end[i] - q2
        k1u, k1d = du, w0 * u
        u2, d2 = u + half * k1u, du + half * k1d
        k2u, k2d = d2, wm * u2
        u3, d3 = u + half * k2u, du + half * k2d
        k3u, k3d = d3, wm * u3
        u4, d4 = u + s * k3u, du + s * k3d
        k4u, k4d = d4, w1 * u4
        u = u + (s / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
        du = du + (s / 6.0) * (k1d + 2.0 * k2d + 2.0 * k3d + k4d)
        if keep_path:
            path.append(u.copy())
    return u, du, (np.array(path) if keep_path else None)


def match_smatrix(q: np.ndarray, r_match: float, u: np.ndarray, du: np.ndarray) -> np.ndarray:
    """S = -A/B for u = A e^{iqr} + B e^{-iqr} at r_match."""
    outgoing = u + du / (1j * q)
    incoming = u - du / (1j * q)
    return -(outgoing / incoming) * np.exp(-2j * q * r_match)


def free_energy_drift(q: np.ndarray, step: float, u: np.ndarray, du: np.ndarray) -> np.ndarray:
    """Relative change of |u'|^2 + q^2 |u|^2 over one free wavelength past the matching point.

    The invariant is exact for V = 0, so any change is the integrator's error
    at this step size.
    """
    n = max(1, int(np.ceil(2.0 * np.pi / (float(np.min(q)) * step))))
    steps = np.full(n, step)
    free = np.zeros(n, dtype=complex)
    u1, du1, _ = _rk4(q, steps, (free, free, free), u, du)
    e0 = np.abs(du) ** 2 + q ** 2 * np.abs(u) ** 2
    e1 = np.abs(du1) ** 2 + q ** 2 * np.abs(u1) ** 2
    return np.abs(e1 - e0) / e0


def integrate_radial(
    spec: PotentialSpec,
    q: float,
    r_match: Optional[float] = None,
    step: Optional[float] = None,
    step_fraction: float = DEFAULT_STEP_FRACTION,
    drift_tolerance: float = 1e-6,
) -> WaveSolution:
    """Regular solution at momentum q and its complex phase shift."""
    if not q > 0:
        raise DomainError(f"momentum must be positive, got {q}", stage="forward")
    radius = spec.support_radius
    if radius == 0 and r_match is None:
        return WaveSolution(q=q, r=np.zeros(1), u=np.zeros(1, dtype=complex), s_matrix=1.0 + 0j, delta_c=0j)
    r_match = radius if r_match is None else r_match
    if r_match < radius:
        raise DomainError(f"r_match={r_match} lies inside the potential range {radius:.4g} fm", stage="forward")
    r_match = max(r_match, 1e-12)

    k_local = local_wavenumber(spec, q)
    if step is None:
        step = step_fraction / k_local
    if step * k_local > MAX_STEP_FRACTION:
        raise AccuracyError(
            f"step {step:.3g} fm does not resolve local wavenumber {k_local:.3g} fm^-1 (need step*k <= {MAX_STEP_FRACTION})",
            step=step, k_local=k_local,
        )

    r = radial_mesh(spec, r_match, step)
    qa = np.array([q], dtype=float)
    u, du, path = _propagate(spec, qa, r, keep_path=True)

    if is_real_potential(spec):
        drift = float(np.max(free_energy_drift(qa, step, u, du)))
        if drift > drift_tolerance:
            raise AccuracyError(f"free-wave invariant drifted by {drift:.3e} at q={q}", drift=drift, step=step)

    s = complex(match_smatrix(qa, r_match, u, du)[0])
    return WaveSolution(q=q, r=r, u=path[:, 0], s_matrix=s, delta_c=complex(np.log(s) / 2j))


def _scan_chunk(spec, q: np.ndarray, r_extra: float, step_fraction: float) -> np.ndarray:
    if spec.support_radius == 0:
        return np.ones(q.shape, dtype=complex)
    r_match = max(spec.support_radius + r_extra, 1e-12)
    step = step_fraction / local_wavenumber(spec, float(q.max()))
    r = radial_mesh(spec, r_match, step)
    u, du, _ = _propagate(spec, q, r)
    return match_smatrix(q, r_match, u, du)


def scan_s_values(
    spec: PotentialSpec,
    q_grid: Sequence[float],
    step_fraction: float = DEFAULT_STEP_FRACTION,
    r_extra: float = 0.0,
    workers: int = 1,
) -> np.ndarray:
    """Complex S(q) over an increasing grid of positive momenta."""
    q = np.asarray(q_grid, dtype=float)
    if q.size == 0 or np.any(q <= 0) or np.any(np.diff(q) <= 0):
        raise DomainError("q grid must be positive and strictly increasing", stage="forward")
    if step_fraction > MAX_STEP_FRACTION:
        raise AccuracyError(f"step fraction {step_fraction} above {MAX_STEP_FRACTION}", step_fraction=step_fraction)

    chunks = [q[i:i + CHUNK_SIZE] for i in range(0, q.size, CHUNK_SIZE)]
    run = lambda chunk: _scan_chunk(spec, chunk, r_extra, step_fraction)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(c) for c in chunks]
    return np.concatenate(parts)


def phases_from_s(s: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """delta = arg(S)/2 unwrapped along q and anchored at the high-q end; rho = arccos(sqrt|S|)."""
    theta = np.unwrap(np.angle(s))
    theta -= 2.0 * np.pi * np.round(theta[-1] / (2.0 * np.pi))
    rho = np.arccos(np.sqrt(np.minimum(1.0, np.abs(s))))
    return theta / 2.0, rho


def samples_from_s(spec: PotentialSpec, q_grid: Sequence[float], s: np.ndarray) -> List[PhaseShiftSample]:
    delta, rho = phases_from_s(s)
    if is_real_potential(spec):
        # |S| = 1 up to rounding, and arccos amplifies rounding near 1
        rho = np.zeros_like(rho)
    return [PhaseShiftSample(q=float(q), delta=float(d), rho=float(p)) for q, d, p in zip(q_grid, delta, rho)]


def scan_smatrix(
    spec: PotentialSpec,
    q_grid: Sequence[float],
    step_fraction: float = DEFAULT_STEP_FRACTION,
    r_extra: float = 0.0,
    workers: int = 1,
) -> List[PhaseShiftSample]:
    s = scan_s_values(spec, q_grid, step_fraction, r_extra, workers)
    logger.info("Forward scan of %s potential: %d momenta up to %.3f fm^-1", spec.kind, len(s), float(np.max(q_grid)))
    return samples_from_s(spec, q_grid, s)


# --- closed forms ----------------------------------------------------------

def square_well_smatrix(v0: complex, width: float, q) -> np.ndarray:
    """S for V = v0 on r < width: e^{-2iqa} (K cot Ka + iq) / (K cot Ka - iq), K = sqrt(q^2 - v0)."""
    q = np.asarray(q, dtype=float)
    k = np.sqrt(q.astype(complex) ** 2 - v0)
    kcot = k / np.tan(k * width)
    return np.exp(-2j * q * width) * (kcot + 1j * q) / (kcot - 1j * q)


def square_well_phase_shift(v0: float, width: float, q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    k = np.sqrt(q ** 2 - v0)
    return -q * width + np.arctan(q * np.tan(k * width) / k)


def _hyp0f1(b: np.ndarray, z: complex, terms: int = 200) -> np.ndarray:
    total = np.ones(b.shape, dtype=complex)
    term = np.ones(b.shape, dtype=complex)
    for m in range(terms):
        term = term * z / ((m + 1) * (b + m))
        total = total + term
        if np.all(np.abs(term) < 1e-17 * np.abs(total)):
            break
    return total


def exponential_well_smatrix(v0: complex, a: float, q) -> np.ndarray:
    """Exact S for V = v0 e^{-ar}: 0F1(;1+nu;v0/a^2) / 0F1(;1-nu;v0/a^2), nu = 2iq/a.

    Follows from the Bessel solutions J_{+-nu}(g e^{-ar/2}), g = 2 sqrt(-v0)/a.
    """
    q = np.asarray(q, dtype=float)
    nu = 2j * q / a
    z = complex(v0) / a ** 2
    return _hyp0f1(1.0 + nu, z) / _hyp0f1(1.0 - nu, z)
