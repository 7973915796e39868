"""
Tests for the forward radial solver and its closed-form checks
"""
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from apps.marchenko.models import ExponentialWell, SquareWell, TabulatedPotential
from apps.marchenko.services import forward_oracle
from common.exceptions import AccuracyError, DomainError


@pytest.fixture
def square_well():
    return SquareWell(v0_re=-2.0, width=1.0)


class TestClosedForms:
    def test_square_well_forms_agree(self):
        q = np.linspace(0.2, 6.0, 30)
        delta = forward_oracle.square_well_phase_shift(-2.0, 1.0, q)
        s = forward_oracle.square_well_smatrix(-2.0, 1.0, q)
        assert np.allclose(np.exp(2j * delta), s, atol=1e-12)

    def test_exponential_born_limit(self):
        """Weak well: S - 1 ~ -4iqV0 / (a (a^2 + 4q^2))"""
        q = np.array([0.5, 1.0, 3.0])
        v0, a = -1e-6, 1.5
        s = forward_oracle.exponential_well_smatrix(v0, a, q)
        born = 1.0 - 4j * q * v0 / (a * (a ** 2 + 4 * q ** 2))
        assert np.allclose(s, born, atol=1e-11)

    def test_closed_forms_unitary_for_real_wells(self):
        q = np.linspace(0.1, 10.0, 40)
        assert np.allclose(np.abs(forward_oracle.exponential_well_smatrix(-3.0, 1.5, q)), 1.0)
        assert np.allclose(np.abs(forward_oracle.square_well_smatrix(-2.0, 1.0, q)), 1.0)


class TestIntegrateRadial:
    """Single-momentum propagation"""

    def test_zero_potential(self):
        solution = forward_oracle.integrate_radial(ExponentialWell(v0_re=0.0), 1.0)
        assert solution.s_matrix == 1.0
        assert solution.delta_c == 0

    def test_square_well_closed_form(self, square_well):
        solution = forward_oracle.integrate_radial(square_well, 1.0, step_fraction=0.01)
        expected = forward_oracle.square_well_smatrix(-2.0, 1.0, 1.0)
        assert abs(solution.s_matrix - expected) < 1e-6

    def test_regular_at_origin(self, square_well):
        solution = forward_oracle.integrate_radial(square_well, 1.5)
        assert solution.u[0] == 0
        assert solution.u[1] == pytest.approx(solution.r[1], rel=1e-3)
        assert solution.r[-1] == pytest.approx(1.0)

    def test_mesh_lands_on_breakpoints(self):
        spec = TabulatedPotential(r=[0.0, 0.37, 1.13], v_re=[-1.0, -0.5, -0.2], v_im=[0.0, 0.0, 0.0])
        mesh = forward_oracle.radial_mesh(spec, 2.0, 0.1)
        assert np.any(np.isclose(mesh, 0.37, rtol=0, atol=1e-15))
        assert np.any(np.isclose(mesh, 1.13, rtol=0, atol=1e-15))
        assert mesh[-1] == 2.0
        assert np.max(np.diff(mesh)) <= 0.1 + 1e-12

    def test_step_halving(self, exponential_well):
        coarse = forward_oracle.integrate_radial(exponential_well, 2.0, step=0.004)
        fine = forward_oracle.integrate_radial(exponential_well, 2.0, step=0.002)
        assert abs(coarse.s_matrix - fine.s_matrix) <= 1e-7

    def test_matching_point_independence(self, square_well):
        near = forward_oracle.integrate_radial(square_well, 1.5, step=1e-3)
        far = forward_oracle.integrate_radial(square_well, 1.5, r_match=3.0, step=1e-3)
        assert abs(near.s_matrix - far.s_matrix) <= 1e-8

    def test_nonpositive_momentum(self, square_well):
        with pytest.raises(DomainError) as info:
            forward_oracle.integrate_radial(square_well, 0.0)
        assert info.value.stage == "forward"

    def test_matching_inside_potential(self, square_well):
        with pytest.raises(DomainError):
            forward_oracle.integrate_radial(square_well, 1.0, r_match=0.5)

    def test_coarse_step_rejected(self, square_well):
        with pytest.raises(AccuracyError) as info:
            forward_oracle.integrate_radial(square_well, 1.0, step=1.0)
        assert info.value.diagnostics["step"] == 1.0

    def test_free_wave_drift_checked(self, square_well):
        k_local = forward_oracle.local_wavenumber(square_well, 1.0)
        with pytest.raises(AccuracyError):
            forward_oracle.integrate_radial(
                square_well, 1.0, r_match=5.0, step=0.09 / k_local, drift_tolerance=1e-12,
            )

    def test_drift_checked_at_support_radius(self, exponential_well):
        """The default matching point still gets a free stretch to check against"""
        with pytest.raises(AccuracyError) as info:
            forward_oracle.integrate_radial(exponential_well, 5.0, step_fraction=0.05, drift_tolerance=1e-12)
        assert info.value.diagnostics["drift"] > 1e-12
        solution = forward_oracle.integrate_radial(exponential_well, 5.0, step_fraction=0.05)
        assert abs(solution.s_matrix) == pytest.approx(1.0, abs=1e-5)

    def test_free_energy_invariant(self):
        """A free wave keeps |u'|^2 + q^2 |u|^2 to the integrator's accuracy"""
        q = np.array([0.5, 2.0])
        u = np.sin(q * 3.0) + 0j
        du = q * np.cos(q * 3.0) + 0j
        fine = forward_oracle.free_energy_drift(q, 0.002, u, du)
        coarse = forward_oracle.free_energy_drift(q, 0.04, u, du)
        assert np.all(fine < 1e-10)
        assert np.all(coarse > fine)


class TestScan:
    """S(q) over momentum grids"""

    def test_square_well_scan(self, square_well):
        q = np.linspace(0.2, 8.0, 79)
        s = forward_oracle.scan_s_values(square_well, q, step_fraction=0.01)
        assert np.max(np.abs(s - forward_oracle.square_well_smatrix(-2.0, 1.0, q))) <= 1e-6

    def test_exponential_well_scan(self, exponential_well):
        q = np.linspace(0.2, 8.0, 79)
        s = forward_oracle.scan_s_values(exponential_well, q, step_fraction=0.01)
        assert np.max(np.abs(s - forward_oracle.exponential_well_smatrix(-3.0, 1.5, q))) <= 1e-6

    def test_tabulated_well_follows_its_nodes(self):
        r = np.linspace(0.0, 12.0, 1201)
        v = -3.0 * np.exp(-1.5 * r)
        spec = TabulatedPotential(r=r.tolist(), v_re=v.tolist(), v_im=np.zeros_like(r).tolist())
        q = np.array([0.5, 1.0, 2.0, 4.0])
        s = forward_oracle.scan_s_values(spec, q)
        assert np.max(np.abs(s - forward_oracle.exponential_well_smatrix(-3.0, 1.5, q))) <= 1e-3

    def test_real_potential_is_unitary(self, exponential_well):
        q = np.linspace(0.1, 8.0, 80)
        s = forward_oracle.scan_s_values(exponential_well, q)
        assert np.max(np.abs(np.abs(s) - 1.0)) <= 1e-9
        samples = forward_oracle.samples_from_s(exponential_well, q, s)
        assert all(sample.rho == 0.0 for sample in samples)

    def test_absorptive_well(self):
        spec = ExponentialWell(v0_re=-3.0, v0_im=-1.0, a=1.5)
        q = np.linspace(0.2, 8.0, 79)
        s = forward_oracle.scan_s_values(spec, q, step_fraction=0.01)
        assert np.max(np.abs(s - forward_oracle.exponential_well_smatrix(complex(-3.0, -1.0), 1.5, q))) <= 1e-6
        assert np.all(np.abs(s) <= 1.0 + 1e-9)
        samples = forward_oracle.samples_from_s(spec, q, s)
        inner = [sample.rho for sample in samples if 0.5 < sample.q < 5.0]
        assert min(inner) > 0

    def test_phase_shifts_decrease_at_high_momentum(self, exponential_samples):
        """Attractive well: positive, falling phase shifts above 1 fm^-1"""
        delta = np.array([s.delta for s in exponential_samples if s.q >= 1.0])
        assert np.all(delta > 0)
        assert np.all(np.diff(delta) < 0)

    def test_phases_anchored_at_high_momentum(self):
        q = np.linspace(0.5, 5.0, 10)
        delta = 0.4 + 2.0 * np.exp(-q)
        delta_out, rho = forward_oracle.phases_from_s(np.exp(2j * delta))
        assert np.allclose(delta_out, delta)
        assert np.allclose(rho, 0.0, atol=1e-7)

    def test_zero_potential_scan(self):
        samples = forward_oracle.scan_smatrix(ExponentialWell(v0_re=0.0), [0.5, 1.0, 2.0])
        assert [s.delta for s in samples] == [0.0, 0.0, 0.0]
        assert [s.rho for s in samples] == [0.0, 0.0, 0.0]

    def test_worker_count_does_not_change_result(self, exponential_well):
        q = 0.05 + 0.05 * np.arange(150)
        serial = forward_oracle.scan_s_values(exponential_well, q, step_fraction=0.05, workers=1)
        threaded = forward_oracle.scan_s_values(exponential_well, q, step_fraction=0.05, workers=3)
        assert np.array_equal(serial, threaded)

    def test_grid_must_increase(self, square_well):
        with pytest.raises(DomainError):
            forward_oracle.scan_s_values(square_well, [1.0, 0.5])
        with pytest.raises(DomainError):
            forward_oracle.scan_s_values(square_well, [0.0, 1.0])

    def test_step_fraction_limit(self, square_well):
        with pytest.raises(AccuracyError):
            forward_oracle.scan_s_values(square_well, [1.0], step_fraction=0.2)

    @given(
        v0_re=st.floats(-5.0, 2.0),
        v0_im=st.floats(-3.0, 0.0),
        width=st.floats(0.3, 2.0),
    )
    def test_absorptive_square_wells_are_sub_unitary(self, v0_re, v0_im, width):
        spec = SquareWell(v0_re=v0_re, v0_im=v0_im, width=width)
        s = forward_oracle.scan_s_values(spec, [0.3, 1.0, 2.5, 5.0], step_fraction=0.05)
        assert np.all(np.abs(s) <= 1.0 + 1e-9)
