"""
Tests for the kernel-coefficient generator
"""
import numpy as np
import pandas as pd
import pytest

from apps.marchenko.models import (
    InterpolantKind,
    KernelCoefficients,
    KernelGrid,
    OpticalCompletion,
    PhaseShiftSample,
    SMatrixMode,
)
from apps.marchenko.services import kernelgen, scatdata
from common.exceptions import DomainError, QuadratureError


class _ScaledSum:
    """Unitary source with Y = sum_i w_i Y_i"""

    is_optical = False

    def __init__(self, *terms):
        self.terms = terms

    def yu(self, q):
        return sum(weight * source.yu(q) for weight, source in self.terms)

    def absorption_weights(self, q):
        return self.terms[0][1].absorption_weights(q)


@pytest.fixture
def small_grid():
    return KernelGrid(h=0.1, N=20)


@pytest.fixture
def reference_model(exponential_samples):
    return scatdata.build_smatrix_model(exponential_samples)


@pytest.fixture
def absorptive_model():
    q = np.linspace(0.25, 6.0, 24)
    delta = 0.8 * np.exp(-q / 2)
    rho = 0.4 * q * np.exp(-q)
    return scatdata.build_smatrix_model(
        [PhaseShiftSample(q=a, delta=b, rho=c) for a, b, c in zip(q, delta, rho)]
    )


class TestGrid:
    def test_from_range(self):
        grid = KernelGrid.from_range(0.04, 4.0)
        assert grid.N == 100
        assert grid.q_max == pytest.approx(np.pi / 0.04)
        assert grid.k_values[0] == -200 and grid.k_values[-1] == 200

    def test_range_must_be_multiple_of_step(self):
        with pytest.raises(ValueError):
            KernelGrid.from_range(0.03, 4.0)

    def test_coefficient_indexing(self, small_grid):
        coeffs = KernelCoefficients.one_hot(small_grid, -3, 2.0)
        assert coeffs[-3] == 2.0
        assert coeffs[3] == 0.0
        assert coeffs.nonnegative.shape == (2 * small_grid.N + 1,)


class TestSimpson:
    def test_weights_integrate_polynomials(self, small_grid):
        q, w = kernelgen.simpson_nodes(small_grid, 64)
        assert np.sum(w) == pytest.approx(small_grid.q_max)
        assert np.sum(w * q ** 3) == pytest.approx(small_grid.q_max ** 4 / 4)

    def test_odd_panels_rejected(self, small_grid):
        with pytest.raises(ValueError):
            kernelgen.simpson_nodes(small_grid, 63)


class TestAssemble:
    """Telescoped Fourier coefficients"""

    def test_null_data_give_zero_kernel(self, null_samples, small_grid):
        model = scatdata.build_smatrix_model(null_samples)
        coeffs = kernelgen.assemble_coefficients(model, small_grid)
        assert np.all(coeffs.values == 0)
        assert coeffs.consistency_defect == 0.0

    def test_synthetic_roundtrip(self):
        """Coefficients are recovered from the Y they generate"""
        grid = KernelGrid(h=0.5, N=4)
        rng = np.random.default_rng(7)
        values = 0.1 * rng.standard_normal(4 * grid.N + 1) + 0j
        source = kernelgen.SyntheticKernelSource(KernelCoefficients(grid=grid, values=values))
        coeffs = kernelgen.assemble_coefficients(source, grid, tol=1e-10, max_refinements=6)
        assert np.max(np.abs(coeffs.values - values)) < 1e-8
        assert coeffs.consistency_defect < 1e-8

    def test_unitary_kernel_is_real(self, reference_model, small_grid):
        coeffs = kernelgen.assemble_coefficients(reference_model, small_grid)
        assert np.all(coeffs.values.imag == 0)

    def test_closure_on_reference_well(self, reference_model):
        """The lowest row misses exactly the kernel at -(2N + 1/2)h on the benchmark grid"""
        grid = KernelGrid.from_range(0.04, 4.0)
        coeffs = kernelgen.assemble_coefficients(reference_model, grid)
        h, N = grid.h, grid.N
        edge = kernelgen.direct_kernel(reference_model, grid, [-(2 * N + 0.5) * h, (2 * N + 1.5) * h])
        scale = np.max(np.abs(coeffs.values))
        assert coeffs.consistency_defect * scale == pytest.approx(abs(edge[0] - edge[1]), abs=2e-4 * scale)
        assert coeffs.consistency_defect < 0.05
        assert coeffs.panels >= 16 * (2 * grid.N + 1)

    def test_linear_in_y(self, reference_model):
        """Coefficients of a sum of sources are the sum of the coefficients"""
        grid = KernelGrid(h=0.2, N=5)
        rng = np.random.default_rng(3)
        synthetic = kernelgen.SyntheticKernelSource(
            KernelCoefficients(grid=grid, values=0.1 * rng.standard_normal(4 * grid.N + 1) + 0j)
        )
        combined = _ScaledSum((2.0, reference_model), (-0.5, synthetic))
        settings = dict(tol=1.0, max_refinements=0)
        first = kernelgen.assemble_coefficients(reference_model, grid, **settings)
        second = kernelgen.assemble_coefficients(synthetic, grid, **settings)
        both = kernelgen.assemble_coefficients(combined, grid, **settings)
        assert both.panels == first.panels == second.panels
        expected = 2.0 * first.values - 0.5 * second.values
        assert np.allclose(both.values, expected, rtol=0, atol=1e-12 * np.max(np.abs(expected)))

    def test_single_rhs_matches_recursion(self, reference_model, small_grid):
        coeffs = kernelgen.assemble_coefficients(reference_model, small_grid)
        scale = np.max(np.abs(coeffs.values))
        top = kernelgen.fourier_rhs(reference_model, small_grid, 2 * small_grid.N + 1, max_refinements=6)
        assert abs(top - coeffs[2 * small_grid.N]) < 1e-4 * scale
        for k in (-7, 0, 5):
            rhs = kernelgen.fourier_rhs(reference_model, small_grid, k, max_refinements=6)
            assert abs(rhs - (coeffs[k - 1] - coeffs[k])) < 1e-4 * scale

    def test_rhs_index_range(self, reference_model, small_grid):
        with pytest.raises(DomainError):
            kernelgen.fourier_rhs(reference_model, small_grid, 2 * small_grid.N + 2)
        with pytest.raises(DomainError):
            kernelgen.fourier_rhs(reference_model, small_grid, -2 * small_grid.N - 1)

    def test_non_convergence(self, reference_model, small_grid):
        with pytest.raises(QuadratureError) as info:
            kernelgen.assemble_coefficients(reference_model, small_grid, tol=1e-16, max_refinements=0)
        assert info.value.stage == "kernelgen"
        assert info.value.diagnostics["panels"] > 0


class TestDirectKernel:
    """Coefficients against the band-limited transform of Y"""

    def test_unitary(self, reference_model, small_grid):
        coeffs = kernelgen.assemble_coefficients(reference_model, small_grid)
        h, N = small_grid.h, small_grid.N
        x = (small_grid.k_values + 0.5) * h
        direct = kernelgen.direct_kernel(reference_model, small_grid, np.append(x, (2 * N + 1.5) * h))
        expected = direct[:-1] - direct[-1]
        assert np.max(np.abs(coeffs.values - expected)) < 1e-4 * np.max(np.abs(coeffs.values))

    @pytest.mark.parametrize("completion", [OpticalCompletion.SPLIT, OpticalCompletion.RECIPROCAL])
    def test_optical(self, absorptive_model, small_grid, completion):
        coeffs = kernelgen.assemble_coefficients(
            absorptive_model, small_grid, completion=completion,
        )
        h, N = small_grid.h, small_grid.N
        x = np.append((small_grid.k_values + 0.5) * h, (2 * N + 1.5) * h)
        direct = kernelgen.direct_kernel(absorptive_model, small_grid, x, completion=completion)
        expected = direct[:-1] - direct[-1]
        assert np.max(np.abs(coeffs.values - expected)) < 1e-4 * np.max(np.abs(coeffs.values))
        assert np.max(np.abs(coeffs.values.imag)) > 0

    def test_completions_differ_only_when_absorptive(self, reference_model, absorptive_model, small_grid):
        split = kernelgen.assemble_coefficients(reference_model, small_grid, mode=SMatrixMode.OPTICAL)
        recip = kernelgen.assemble_coefficients(
            reference_model, small_grid, mode=SMatrixMode.OPTICAL, completion=OpticalCompletion.RECIPROCAL,
        )
        assert np.allclose(split.values, recip.values, atol=1e-14)
        split = kernelgen.assemble_coefficients(absorptive_model, small_grid)
        recip = kernelgen.assemble_coefficients(absorptive_model, small_grid, completion=OpticalCompletion.RECIPROCAL)
        assert not np.allclose(split.values, recip.values)

    def test_reciprocal_rejects_total_absorption(self, small_grid):
        q = np.array([0.5, 1.0, 1.5, 2.0])
        model = scatdata.build_smatrix_model(
            [PhaseShiftSample(q=a, delta=0.1, rho=np.pi / 2) for a in q],
            interpolant=InterpolantKind.PCHIP,
        )
        with pytest.raises(DomainError):
            kernelgen.assemble_coefficients(model, small_grid, completion=OpticalCompletion.RECIPROCAL)


class TestExport:
    def test_coefficient_csv(self, tmp_path, reference_model, small_grid):
        coeffs = kernelgen.assemble_coefficients(reference_model, small_grid)
        path = kernelgen.write_coefficients(tmp_path / "F.csv", coeffs)
        frame = pd.read_csv(path, comment="#")
        assert list(frame.columns) == ["k", "ReF", "ImF"]
        assert len(frame) == 4 * small_grid.N + 1
        assert frame["ReF"].to_numpy() == pytest.approx(coeffs.values.real, rel=1e-11, abs=1e-300)
        assert path.read_text().startswith("# h=0.1 N=20\n")
