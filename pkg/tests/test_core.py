"""Units, geometry validation, and environment coefficient derivation."""

import math

import numpy as np
import pytest

from fringeworks.environment import (
    EnvironmentError_,
    EnvironmentSpec,
    UnsupportedKindError,
    derive_coefficients,
    positivity_transient,
)
from fringeworks.geometry import (
    ExperimentGeometry,
    GeometryError,
    geometry_to_natural,
    geometry_to_si,
    validate_geometry,
)
from fringeworks.units import UnitError, UnitSystem


class TestUnitSystem:
    def test_natural_pins_hbar_and_mass(self):
        u = UnitSystem.natural()
        assert u.hbar == 1.0 and u.mass == 1.0

    def test_natural_rejects_other_hbar(self):
        with pytest.raises(UnitError):
            UnitSystem(mode="natural", hbar=2.0, mass=1.0, kB=1.0)

    def test_positive_required(self):
        with pytest.raises(UnitError):
            UnitSystem(mode="si", hbar=-1.0, mass=1.0, kB=1.0)

    def test_si_scales_consistent(self):
        u = UnitSystem.si(mass=1.67492749804e-27)
        # ell^2 / tau must equal hbar / M for the free propagator to survive rescaling
        assert u.length_scale**2 / u.time_scale == pytest.approx(u.hbar / u.mass, rel=1e-14)


class TestGeometryValidation:
    def test_fig1_parameters_ok(self):
        geom = ExperimentGeometry(L0=2.0, sigma_x0=0.5)
        assert validate_geometry(geom) is geom

    def test_sigma_exceeds_l0(self):
        with pytest.raises(GeometryError) as err:
            validate_geometry(ExperimentGeometry(L0=1.0, sigma_x0=2.0))
        assert any(code == "SIGMA_EXCEEDS_L0" for code, _ in err.value.violations)

    def test_tl_inconsistent(self):
        # lambda_dB * L * M / (2 pi hbar) = 0.35 but t_L = 0.20 supplied
        lam_L = 0.35 * 2.0 * math.pi
        geom = ExperimentGeometry(L0=2.0, sigma_x0=0.5, L=lam_L, lambda_dB=1.0, M=1.0, t_L=0.20)
        with pytest.raises(GeometryError) as err:
            validate_geometry(geom)
        assert any(code == "TL_INCONSISTENT" for code, _ in err.value.violations)

    def test_tl_consistent_passes(self):
        lam_L = 0.35 * 2.0 * math.pi
        geom = ExperimentGeometry(L0=2.0, sigma_x0=0.5, L=lam_L, lambda_dB=1.0, M=1.0, t_L=0.35)
        validate_geometry(geom)

    def test_all_violations_collected(self):
        geom = ExperimentGeometry(L0=-1.0, sigma_x0=-2.0, M=-1.0)
        with pytest.raises(GeometryError) as err:
            validate_geometry(geom)
        codes = [code for code, _ in err.value.violations]
        assert codes.count("NONPOSITIVE_LENGTH") == 2
        assert "NONPOSITIVE_MASS" in codes

    def test_slit_separation_halved(self):
        geom = ExperimentGeometry.from_slit_separation(4.0, sigma_x0=0.5)
        assert geom.L0 == 2.0

    def test_flight_time_derived(self, nat):
        geom = ExperimentGeometry(L0=2.0, sigma_x0=0.5, L=2.0 * math.pi, lambda_dB=1.0, M=1.0)
        assert geom.flight_time(nat) == pytest.approx(1.0, rel=1e-14)


class TestUnitRoundTrip:
    def test_natural_si_round_trip(self):
        u = UnitSystem.si(mass=1.396e-24)
        geom = ExperimentGeometry(
            L0=2e-7, sigma_x0=2.5e-8, sigma_y0=1e-8, k_y=1e9,
            L=1.38, lambda_dB=3.11e-12, M=1.396e-24, t_L=9.042089060057111e-3,
        )
        back = geometry_to_si(geometry_to_natural(geom, u), u)
        for name in ("L0", "sigma_x0", "sigma_y0", "k_y", "L", "lambda_dB", "M", "t_L"):
            assert getattr(back, name) == pytest.approx(getattr(geom, name), rel=1e-12)


class TestEnvironmentSpec:
    def test_qbm_requires_kbt(self):
        with pytest.raises(EnvironmentError_):
            EnvironmentSpec(kind="qbm_ohmic", gamma0=0.001)

    def test_negative_lambda_rejected(self):
        with pytest.raises(EnvironmentError_):
            EnvironmentSpec(kind="scattering", Lambda=-1.0)

    def test_composite_needs_members(self):
        with pytest.raises(EnvironmentError_):
            EnvironmentSpec(kind="composite")

    def test_composite_rejects_nesting(self):
        inner = EnvironmentSpec(
            kind="composite", composite_members=(EnvironmentSpec.isolated(),)
        )
        with pytest.raises(EnvironmentError_):
            EnvironmentSpec(kind="composite", composite_members=(inner,))

    def test_member_selection(self):
        comp = EnvironmentSpec(
            kind="composite",
            composite_members=(EnvironmentSpec.qbm(1e-3, 300.0), EnvironmentSpec.scattering(3.0)),
        )
        assert comp.member("scattering").Lambda == 3.0
        with pytest.raises(UnsupportedKindError):
            comp.member("dephasing")


class TestDeriveCoefficients:
    def test_isolated_all_zero(self, nat):
        c = derive_coefficients(EnvironmentSpec.isolated(), nat)
        assert (c.gamma, c.D, c.f) == (0.0, 0.0, 0.0)

    def test_fig2_diffusion(self, nat):
        c = derive_coefficients(EnvironmentSpec.qbm(0.001, 300.0), nat)
        assert c.gamma == 0.001
        assert c.D == pytest.approx(0.6, rel=1e-15)
        assert c.f == 0.0

    def test_anomalous_term(self, nat):
        c = derive_coefficients(EnvironmentSpec.qbm(0.001, 300.0, include_f=True), nat)
        assert c.f == pytest.approx(1.0 / 300.0, rel=1e-15)

    def test_homogeneous_in_gamma0(self, nat):
        c1 = derive_coefficients(EnvironmentSpec.qbm(0.001, 300.0, include_f=True), nat)
        c2 = derive_coefficients(EnvironmentSpec.qbm(0.002, 300.0, include_f=True), nat)
        assert c2.gamma == pytest.approx(2.0 * c1.gamma, rel=1e-15)
        assert c2.D == pytest.approx(2.0 * c1.D, rel=1e-15)
        assert c2.f == c1.f

    def test_unsupported_kind(self, nat):
        with pytest.raises(UnsupportedKindError):
            derive_coefficients(EnvironmentSpec.scattering(1.0), nat)


class TestPositivityTransient:
    @pytest.mark.parametrize("kBT,expected", [(300.0, 1.0 / 300.0), (1.0, 1.0), (600.0, 1.0 / 600.0)])
    def test_values(self, nat, kBT, expected):
        assert positivity_transient(EnvironmentSpec.qbm(1e-3, kBT), nat) == pytest.approx(
            expected, rel=1e-15
        )

    def test_product_with_kbt_is_hbar(self, nat):
        rng = np.random.default_rng(7)
        for kBT in rng.uniform(0.5, 2000.0, size=20):
            assert positivity_transient(EnvironmentSpec.qbm(1e-3, kBT), nat) * kBT == pytest.approx(
                nat.hbar, rel=1e-15
            )

    def test_unsupported_kind(self, nat):
        with pytest.raises(UnsupportedKindError):
            positivity_transient(EnvironmentSpec.isolated(), nat)
