"""Density matrix, screen intensity, and far-screen closed form."""

import math
import warnings

import numpy as np
import pytest

from fringeworks.dynamics import free_gaussian_reference, initial_state, integrate
from fringeworks.environment import EnvironmentSpec
from fringeworks.geometry import ExperimentGeometry
from fringeworks.pattern import (
    GammaRangeError,
    GridTooNarrowWarning,
    coefficients_from_experiment,
    default_grid,
    density_matrix,
    farfield_intensity,
    farfield_profile,
    intensity,
    intensity_profile,
)
from fringeworks.units import UnitSystem

NAT = UnitSystem.natural()


def _direct_initial_rho(geom, x, xp):
    """rho(x, x', 0) built straight from the superposed wavefunction."""
    sig2 = geom.sigma_x0**2
    L0 = geom.L0
    norm = math.exp(-initial_state(geom, "physical").traceLog)

    def packet_pair(y):
        return math.exp(-((y - L0) ** 2) / (4 * sig2)) + math.exp(-((y + L0) ** 2) / (4 * sig2))

    return norm * packet_pair(x) * packet_pair(xp)


class TestDensityMatrix:
    def test_hermitian_on_random_pairs(self, fig2_trajectory, fig_geometry):
        s = fig2_trajectory.state_at(0.3)
        rng = np.random.default_rng(5)
        for _ in range(40):
            x, xp = rng.uniform(-4.0, 4.0, size=2)
            a = density_matrix(s, fig_geometry.L0, x, xp)
            b = density_matrix(s, fig_geometry.L0, xp, x)
            assert a == pytest.approx(np.conj(b), rel=1e-12, abs=1e-15)

    def test_diagonal_is_real(self, fig2_trajectory, fig_geometry):
        s = fig2_trajectory.state_at(0.41)
        for x in np.linspace(-3, 3, 11):
            value = density_matrix(s, fig_geometry.L0, x, x)
            assert abs(value.imag) < 1e-14 * abs(value)

    def test_t0_matches_wavefunction_construction(self, fig_geometry):
        s0 = initial_state(fig_geometry, "physical")
        rng = np.random.default_rng(9)
        for _ in range(30):
            x, xp = rng.uniform(-3.5, 3.5, size=2)
            got = density_matrix(s0, fig_geometry.L0, x, xp)
            want = _direct_initial_rho(fig_geometry, x, xp)
            assert got.real == pytest.approx(want, rel=1e-12, abs=1e-15)
            assert abs(got.imag) <= 1e-13 * abs(want)

    def test_zero_separation_degenerates_to_four_single(self, fig_geometry):
        s0 = initial_state(fig_geometry, "physical")
        x, xp = 0.37, -0.81
        u, v = x - xp, x + xp
        single = math.exp(-s0.traceLog) * np.exp(-s0.A * u**2 - s0.C * v**2)
        got = density_matrix(s0, 0.0, x, xp)
        assert got.real == pytest.approx(4.0 * single, rel=1e-12)


class TestIntensity:
    def test_matches_density_matrix_diagonal(self, fig2_trajectory, fig_geometry):
        # qbm: the ansatz overlap weight reproduces rho(x, x) exactly
        for t in (0.1, 0.41, 1.0):
            s = fig2_trajectory.state_at(t)
            gamma = math.exp(-4.0 * fig_geometry.L0**2 * (s.A - s.C))
            for x in np.linspace(-3.0, 3.0, 13):
                diag = density_matrix(s, fig_geometry.L0, x, x).real
                val = intensity(s, fig_geometry.L0, gamma, x)
                assert val == pytest.approx(diag, rel=1e-10)

    def test_centre_value(self, fig_geometry):
        # at x = 0 the pattern reduces to the normalization times (1 + Gamma)
        s = initial_state(fig_geometry, "physical")
        gamma = 0.7
        got = intensity(s, fig_geometry.L0, gamma, 0.0)
        want = 2.0 * math.exp(-s.traceLog) * math.exp(-4.0 * s.C * fig_geometry.L0**2) * (1.0 + gamma)
        assert got == pytest.approx(want, rel=1e-13)

    def test_gamma_zero_envelope_positive(self, isolated_trajectory, fig_geometry):
        s = isolated_trajectory.state_at(0.5)
        xs = default_grid(s, fig_geometry.L0)
        vals = intensity(s, fig_geometry.L0, 0.0, xs)
        assert np.all(vals > 0.0)

    def test_gamma_range_enforced(self, fig_geometry):
        s = initial_state(fig_geometry, "physical")
        with pytest.raises(GammaRangeError):
            intensity(s, fig_geometry.L0, 1.2, 0.0)
        with pytest.raises(GammaRangeError):
            intensity(s, fig_geometry.L0, -0.1, 0.0)

    def test_positivity_for_any_gamma_in_range(self, fig2_trajectory, fig_geometry):
        rng = np.random.default_rng(2)
        for t in (0.2, 0.6, 1.2):
            s = fig2_trajectory.state_at(t)
            xs = default_grid(s, fig_geometry.L0)
            for gamma in rng.uniform(0.0, 1.0, size=5):
                assert np.all(intensity(s, fig_geometry.L0, float(gamma), xs) >= 0.0)

    def test_parity(self, fig2_trajectory, fig_geometry):
        s = fig2_trajectory.state_at(0.41)
        xs = np.linspace(0.0, 4.0, 101)
        plus = intensity(s, fig_geometry.L0, 0.6, xs)
        minus = intensity(s, fig_geometry.L0, 0.6, -xs)
        np.testing.assert_allclose(plus, minus, rtol=1e-12)


class TestIntensityProfile:
    def test_fig1a_isolated_fringes_vs_strong_bath(self, fig_geometry):
        s0 = initial_state(fig_geometry, "paper")
        iso = EnvironmentSpec.isolated()
        strong = EnvironmentSpec.qbm(0.01, 300.0)
        t_iso = integrate(s0, iso, 0.2, tol=1e-9)
        t_str = integrate(s0, strong, 0.2, tol=1e-9)
        p_iso = intensity_profile(t_iso, iso, fig_geometry.L0, 0.2)
        p_str = intensity_profile(t_str, strong, fig_geometry.L0, 0.2)
        # isolated keeps full interference weight, the strong bath kills it
        assert p_iso.gamma_used == 1.0
        assert p_str.gamma_used < 0.05

    def test_unit_area_normalization(self, fig2_trajectory, fig_geometry):
        prof = intensity_profile(
            fig2_trajectory, fig2_trajectory.env, fig_geometry.L0, 0.41, normalization="unit_area"
        )
        assert np.trapezoid(prof.values, prof.xs) == pytest.approx(1.0, abs=1e-6)

    def test_unit_peak_normalization(self, fig2_trajectory, fig_geometry):
        prof = intensity_profile(fig2_trajectory, fig2_trajectory.env, fig_geometry.L0, 0.41)
        assert np.max(prof.values) == 1.0

    def test_narrow_grid_warns(self, fig2_trajectory, fig_geometry):
        with pytest.warns(GridTooNarrowWarning):
            prof = intensity_profile(
                fig2_trajectory, fig2_trajectory.env, fig_geometry.L0, 0.41,
                grid=np.linspace(-1.0, 1.0, 201),
            )
        assert "GRID_TOO_NARROW" in prof.flags

    def test_symmetric_grid_symmetric_values(self, fig2_trajectory, fig_geometry):
        prof = intensity_profile(fig2_trajectory, fig2_trajectory.env, fig_geometry.L0, 0.41)
        np.testing.assert_allclose(prof.values, prof.values[::-1], rtol=1e-12)


class TestFarScreen:
    def test_experiment_coefficients_unit_case(self, nat):
        geom = ExperimentGeometry(L0=2.0, sigma_x0=1.0, L=1.0, lambda_dB=1.0)
        B_exp, C_exp, _ = coefficients_from_experiment(geom, nat)
        assert B_exp == pytest.approx(2.0 * math.pi, rel=1e-14)
        assert C_exp == pytest.approx(8.0 * math.pi**2, rel=1e-14)

    def test_experiment_coefficients_scaling(self, nat):
        geom = ExperimentGeometry(L0=2.0, sigma_x0=1.0, L=2.0, lambda_dB=1.0)
        B_exp, C_exp, _ = coefficients_from_experiment(geom, nat)
        assert B_exp == pytest.approx(math.pi, rel=1e-14)
        assert C_exp == pytest.approx(2.0 * math.pi**2, rel=1e-14)

    def test_centre_envelope_times_one_plus_gamma(self, nat):
        geom = ExperimentGeometry(L0=2.0, sigma_x0=1.0, L=50.0, lambda_dB=1.0)
        gamma = 0.43
        got = farfield_intensity(geom, gamma, 0.0, units=nat)
        envelope0 = 8.0 * math.pi * geom.sigma_x0**2 / (geom.lambda_dB * geom.L)
        assert got == pytest.approx(envelope0 * (1.0 + gamma), rel=1e-14)

    def test_half_l0_first_zero(self, nat):
        geom = ExperimentGeometry(L0=2.0, sigma_x0=1.0, L=50.0, lambda_dB=1.0)
        x0 = geom.lambda_dB * geom.L / (2.0 * geom.L0)
        val = farfield_intensity(geom, 1.0, x0, separation_convention="half_L0", units=nat)
        assert abs(val) < 1e-12

    def test_gamma_range(self, nat):
        geom = ExperimentGeometry(L0=2.0, sigma_x0=1.0, L=50.0, lambda_dB=1.0)
        with pytest.raises(GammaRangeError):
            farfield_intensity(geom, 1.5, 0.0, units=nat)

    def test_full_2l0_matches_dynamical_period(self, nat):
        # the dynamical fringe phase 4 B(t_L) L0 x approaches the closed-form
        # 2 pi (2 L0) x / (lambda L) once the flight is deep in the far field
        t_L = 10.0
        geom = ExperimentGeometry(L0=2.0, sigma_x0=0.5, L=2.0 * math.pi * t_L, lambda_dB=1.0, M=1.0)
        ref = free_gaussian_reference(0.5, t_L)
        dyn_freq = 4.0 * abs(ref.B) * geom.L0
        closed_freq = 2.0 * math.pi * (2.0 * geom.L0) / (geom.lambda_dB * geom.L)
        assert dyn_freq == pytest.approx(closed_freq, rel=0.01)

    def test_far_screen_ratio_reported(self, nat):
        geom = ExperimentGeometry(L0=2.0, sigma_x0=0.5, L=2.0 * math.pi * 10.0, lambda_dB=1.0, M=1.0)
        _, _, ratio = coefficients_from_experiment(geom, nat)
        assert ratio == pytest.approx(10.0 / (0.5 * 2.0), rel=1e-12)

    def test_experiment_envelope_matches_dynamics(self, nat):
        # C_exp reproduces the integrated envelope coefficient at t_L
        t_L = 10.0
        geom = ExperimentGeometry(L0=2.0, sigma_x0=0.5, L=2.0 * math.pi * t_L, lambda_dB=1.0, M=1.0)
        _, C_exp, _ = coefficients_from_experiment(geom, nat)
        traj = integrate(initial_state(geom, "physical"), EnvironmentSpec.isolated(), t_L, tol=1e-10)
        # 4 C(t_L) x^2 is the dynamical envelope exponent; the closed form
        # uses (2 sqrt2 pi sigma x / (lambda L))^2 = C_exp x^2
        C_dyn = traj.state_at(t_L).C
        assert 4.0 * C_dyn == pytest.approx(C_exp, rel=0.01)

    def test_profile_sampling(self, nat):
        geom = ExperimentGeometry(L0=2.0, sigma_x0=0.5, L=2.0 * math.pi * 10.0, lambda_dB=1.0, M=1.0)
        prof = farfield_profile(geom, 0.8, units=nat)
        assert np.max(prof.values) == 1.0
        assert len(prof.xs) == 2001
