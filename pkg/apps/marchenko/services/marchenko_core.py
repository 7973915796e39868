"""
Algebraic Marchenko solver on the triangular-wave basis.

With F(x, y) = sum Delta_k(x) F_{k,j} Delta_j(y) and L(x, y) = sum P_j(x) Delta_j(y),
the Marchenko equation at x = ph becomes, for every p = 0..N,

    sum_m (delta_jm + sum_n zeta(n, m, p) F_{n,j}) P_{p,m} = -F_{p,j},   j = 0..N

and the potential follows from V(r) = -2 dL(r, r)/dr on the diagonal P_{p,p}.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Tuple

import numpy as np
from scipy.linalg import get_lapack_funcs, lu_factor, lu_solve

from apps.marchenko.models import KernelCoefficients, KernelGrid, Kinematics, PotentialGrid, TranslationTable
from common.exceptions import DomainError, InversionError

logger = logging.getLogger(__name__)

DEFAULT_CONDITION_LIMIT = 1e6


def zeta(n: int, m: int, p: int, h: float) -> float:
    """Overlap int_{ph}^inf Delta_m(t) Delta_n(t) dt of two triangular waves."""
    kd = lambda a, b: 1.0 if a == b else 0.0
    eta = lambda cond: 1.0 if cond else 0.0
    return (h / 6.0) * (
        2.0 * kd(n, m) * (kd(n, p) + 2.0 * eta(n >= p + 1))
        + kd(n, m - 1) * eta(n >= p)
        + kd(n, m + 1) * eta(m >= p)
    )


class OverlapTensor:
    """zeta(n, m, p) for 0 <= n, m, p <= N.

    Z_p is tridiagonal in (n, m), so slices are built on demand instead of
    holding the (N+1)^3 table.
    """

    def __init__(self, h: float, N: int):
        self.h = h
        self.N = N
        self._idx = np.arange(N + 1)

    def __call__(self, n: int, m: int, p: int) -> float:
        return zeta(n, m, p, self.h)

    def matrix(self, p: int) -> np.ndarray:
        """Z_p[n, m] = zeta(n, m, p)."""
        n = self._idx[:, None]
        m = self._idx[None, :]
        diag = (n == m) * (2.0 * ((n == p) + 2.0 * (n >= p + 1)))
        upper = (n == m - 1) * (n >= p)
        lower = (n == m + 1) * (m >= p)
        return (self.h / 6.0) * (diag + upper + lower)

    @property
    def table(self) -> np.ndarray:
        """Dense [n, m, p] table; small grids only."""
        return np.stack([self.matrix(p) for p in range(self.N + 1)], axis=-1)


def build_F_matrix(coeffs: KernelCoefficients) -> np.ndarray:
    """F_{n,j} = F_{0,n+j} for n, j = 0..N."""
    idx = np.arange(coeffs.grid.N + 1)
    return coeffs.nonnegative[np.add.outer(idx, idx)]


def _condition_1norm(a: np.ndarray, lu: np.ndarray) -> float:
    gecon, = get_lapack_funcs(("gecon",), (lu,))
    rcond, info = gecon(lu, np.linalg.norm(a, 1), norm="1")
    if info != 0 or rcond <= 0 or not np.isfinite(rcond):
        return np.inf
    return 1.0 / rcond


def system_matrix(F_matrix: np.ndarray, overlaps: OverlapTensor, p: int) -> np.ndarray:
    """A^{(p)}_{jm} = delta_jm + sum_n zeta(n, m, p) F_{n,j}."""
    size = F_matrix.shape[0]
    return np.eye(size, dtype=complex) + F_matrix.T @ overlaps.matrix(p)


def solve_translation(
    F_matrix: np.ndarray,
    grid: KernelGrid,
    workers: int = 1,
    condition_limit: float = DEFAULT_CONDITION_LIMIT,
) -> TranslationTable:
    """Solve the N+1 independent dense systems, one per radial point."""
    size = grid.N + 1
    if F_matrix.shape != (size, size):
        raise DomainError(f"F matrix shape {F_matrix.shape} does not match N={grid.N}", stage="marchenko")
    F_matrix = np.asarray(F_matrix, dtype=complex)
    overlaps = OverlapTensor(grid.h, grid.N)

    def solve_point(p: int) -> Tuple[np.ndarray, float]:
        a = system_matrix(F_matrix, overlaps, p)
        if not np.all(np.isfinite(a)):
            raise InversionError(f"system at p={p} has non-finite entries", p=p)
        lu, piv = lu_factor(a, check_finite=False)
        cond = _condition_1norm(a, lu)
        if cond > condition_limit:
            raise InversionError(
                f"system at p={p} (r={p * grid.h:.4g} fm) is ill-conditioned: cond={cond:.3e} > {condition_limit:.1e}",
                p=p, condition=cond,
            )
        return lu_solve((lu, piv), -F_matrix[p, :], check_finite=False), cond

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(solve_point, range(size)))
    else:
        results = [solve_point(p) for p in range(size)]

    values = np.vstack([row for row, _ in results])
    conds = np.array([c for _, c in results])
    logger.info("Solved %d Marchenko systems of size %d; max condition number %.3e", size, size, conds.max())
    if conds.max() > 0.1 * condition_limit:
        logger.warning("Condition numbers approach the limit %.1e", condition_limit)
    return TranslationTable(grid=grid, values=values, condition_numbers=conds)


def extract_potential(table: TranslationTable, kin: Kinematics) -> PotentialGrid:
    """V = -2 dL(r,r)/dr by second-order differences, converted to MeV."""
    grid = table.grid
    if grid.N < 2:
        raise DomainError("potential extraction needs N >= 2", stage="marchenko")
    v_fm2 = -2.0 * np.gradient(table.diagonal, grid.h, edge_order=2)
    return PotentialGrid(r=grid.r, v_mev=kin.to_mev(v_fm2), kinematics=kin)


def marchenko_residual(coeffs: KernelCoefficients, table: TranslationTable, grid: KernelGrid) -> float:
    """max over (ph, jh) of |F(x+y) + L(x,y) + int_x^inf L(x,t) F(t,y) dt|.

    The integral of the basis expansions is exact through the overlap tensor.
    """
    if coeffs.grid != grid or table.grid != grid:
        raise DomainError("coefficients, table and grid disagree", stage="marchenko")
    F = build_F_matrix(coeffs)
    P = table.values
    overlaps = OverlapTensor(grid.h, grid.N)
    integral = np.vstack([F.T @ (overlaps.matrix(p) @ P[p]) for p in range(grid.N + 1)])
    return float(np.max(np.abs(F + P + integral)))
