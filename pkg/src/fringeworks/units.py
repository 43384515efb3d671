"""Unit systems shared by every other module.

All internal dynamics runs in natural units hbar = M = 1 (lengths and times
are then pure numbers, temperatures are frequencies).  An SI adapter converts
on the way in and out using the scales fixed by hbar = c = M = 1:

    length scale  ell = hbar / (M c)
    time scale    tau = hbar / (M c^2)

so that ell**2 / tau = hbar / M, which is the combination the free
Schroedinger propagator actually cares about.
"""

from __future__ import annotations

from dataclasses import dataclass

HBAR_SI = 1.054571817e-34  # J s
KB_SI = 1.380649e-23  # J / K
C_SI = 299792458.0  # m / s


class UnitError(ValueError):
    """Raised for ill-formed unit systems or conversion requests."""


@dataclass(frozen=True)
class UnitSystem:
    """Bundle of (hbar, mass, kB) defining the working unit system.

    mode "natural" pins hbar = mass = 1 exactly; mode "si" carries the SI
    constants plus the particle mass in kg.
    """

    mode: str
    hbar: float
    mass: float
    kB: float

    def __post_init__(self):
        if self.mode not in ("natural", "si"):
            raise UnitError(f"unknown unit mode {self.mode!r}")
        for name in ("hbar", "mass", "kB"):
            if not getattr(self, name) > 0.0:
                raise UnitError(f"{name} must be strictly positive")
        if self.mode == "natural" and (self.hbar != 1.0 or self.mass != 1.0):
            raise UnitError("natural mode requires hbar = 1 and mass = 1 exactly")

    @staticmethod
    def natural(kB: float = 1.0) -> "UnitSystem":
        return UnitSystem(mode="natural", hbar=1.0, mass=1.0, kB=kB)

    @staticmethod
    def si(mass: float) -> "UnitSystem":
        if not mass > 0.0:
            raise UnitError("mass must be strictly positive")
        return UnitSystem(mode="si", hbar=HBAR_SI, mass=mass, kB=KB_SI)

    @property
    def length_scale(self) -> float:
        """Metres per natural length unit (1.0 in natural mode)."""
        if self.mode == "natural":
            return 1.0
        return self.hbar / (self.mass * C_SI)

    @property
    def time_scale(self) -> float:
        """Seconds per natural time unit (1.0 in natural mode)."""
        if self.mode == "natural":
            return 1.0
        return self.hbar / (self.mass * C_SI**2)

    @property
    def energy_scale(self) -> float:
        """Joules per natural energy unit (rest energy M c^2 in SI)."""
        if self.mode == "natural":
            return 1.0
        return self.mass * C_SI**2

    def thermal_energy(self, temperature: float) -> float:
        """kB * T in this system's energy unit."""
        return self.kB * temperature
