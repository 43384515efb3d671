"""Experiment geometry: packet separation, widths, flight path.

L0 is stored as the HALF separation of the packet centers (centers at
+/- L0).  Any external "slit separation d" is converted as L0 = d / 2 at the
ingestion boundary, never downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .units import UnitSystem

TL_REL_TOL = 1e-9


class GeometryError(ValueError):
    """Carries the complete list of violated geometry invariants."""

    def __init__(self, violations: list[tuple[str, str]]):
        self.violations = violations
        codes = ", ".join(code for code, _ in violations)
        super().__init__(f"invalid geometry: {codes}")


@dataclass(frozen=True)
class ExperimentGeometry:
    """Two-packet interferometer geometry.

    Only L0 and sigma_x0 are required; the flight-path fields (L, lambda_dB,
    M, t_L) matter for far-screen work and may stay None for the natural-unit
    runs.  sigma_y0 and k_y are carried for completeness; the transverse
    motion is absorbed into the overall normalization and never integrated.
    """

    L0: float
    sigma_x0: float
    sigma_y0: float | None = None
    k_y: float | None = None
    L: float | None = None
    lambda_dB: float | None = None
    M: float | None = None
    t_L: float | None = None

    @staticmethod
    def from_slit_separation(d: float, **kwargs) -> "ExperimentGeometry":
        return ExperimentGeometry(L0=d / 2.0, **kwargs)

    def flight_time(self, units: UnitSystem) -> float | None:
        """t_L, either as supplied or derived from M * lambda_dB * L / (2 pi hbar)."""
        if self.t_L is not None:
            return self.t_L
        if self.L is not None and self.lambda_dB is not None:
            mass = self.M if self.M is not None else units.mass
            return mass * self.lambda_dB * self.L / (2.0 * math.pi * units.hbar)
        return None


def validate_geometry(geom: ExperimentGeometry, units: UnitSystem | None = None) -> ExperimentGeometry:
    """Return the geometry unchanged if every invariant holds.

    Collects ALL violations (machine-readable codes) instead of stopping at
    the first one.
    """
    units = units if units is not None else UnitSystem.natural()
    violations: list[tuple[str, str]] = []

    for name in ("L0", "sigma_x0"):
        value = getattr(geom, name)
        if not value > 0.0:
            violations.append(("NONPOSITIVE_LENGTH", f"{name} must be > 0, got {value}"))
    for name in ("sigma_y0", "L", "lambda_dB", "t_L"):
        value = getattr(geom, name)
        if value is not None and not value > 0.0:
            violations.append(("NONPOSITIVE_LENGTH", f"{name} must be > 0, got {value}"))
    if geom.M is not None and not geom.M > 0.0:
        violations.append(("NONPOSITIVE_MASS", f"M must be > 0, got {geom.M}"))

    if geom.L0 > 0.0 and geom.sigma_x0 > 0.0 and geom.sigma_x0 > geom.L0:
        violations.append(
            ("SIGMA_EXCEEDS_L0", f"sigma_x0 = {geom.sigma_x0} exceeds L0 = {geom.L0}")
        )

    if (
        geom.t_L is not None
        and geom.L is not None
        and geom.lambda_dB is not None
        and (geom.M is not None or units is not None)
    ):
        mass = geom.M if geom.M is not None else units.mass
        expected = mass * geom.lambda_dB * geom.L / (2.0 * math.pi * units.hbar)
        if expected > 0.0 and abs(geom.t_L - expected) > TL_REL_TOL * expected:
            violations.append(
                ("TL_INCONSISTENT", f"t_L = {geom.t_L} but M*lambda_dB*L/(2 pi hbar) = {expected}")
            )

    if violations:
        raise GeometryError(violations)
    return geom


def geometry_to_natural(geom: ExperimentGeometry, units: UnitSystem) -> ExperimentGeometry:
    """Express an SI geometry in natural units (identity for natural input)."""
    if units.mode == "natural":
        return geom
    ell = units.length_scale
    tau = units.time_scale

    def _len(v):
        return None if v is None else v / ell

    return replace(
        geom,
        L0=geom.L0 / ell,
        sigma_x0=geom.sigma_x0 / ell,
        sigma_y0=_len(geom.sigma_y0),
        k_y=None if geom.k_y is None else geom.k_y * ell,
        L=_len(geom.L),
        lambda_dB=_len(geom.lambda_dB),
        M=None if geom.M is None else geom.M / units.mass,
        t_L=None if geom.t_L is None else geom.t_L / tau,
    )


def geometry_to_si(geom: ExperimentGeometry, units: UnitSystem) -> ExperimentGeometry:
    """Inverse of geometry_to_natural for the same unit system."""
    if units.mode == "natural":
        return geom
    ell = units.length_scale
    tau = units.time_scale

    def _len(v):
        return None if v is None else v * ell

    return replace(
        geom,
        L0=geom.L0 * ell,
        sigma_x0=geom.sigma_x0 * ell,
        sigma_y0=_len(geom.sigma_y0),
        k_y=None if geom.k_y is None else geom.k_y / ell,
        L=_len(geom.L),
        lambda_dB=_len(geom.lambda_dB),
        M=None if geom.M is None else geom.M * units.mass,
        t_L=None if geom.t_L is None else geom.t_L * tau,
    )
