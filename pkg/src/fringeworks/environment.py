"""Environment models and their master-equation coefficients.

Supported kinds:

    isolated    closed system, gamma = D = f = 0
    qbm_ohmic   quantum Brownian motion, ohmic bath, high-temperature limit
    scattering  Markovian localization with rate Lambda (no dissipation)
    dephasing   random-emission-time phase averaging, complex amplitude
                C_deph = deph_A + i deph_B
    composite   one-level combination of the above

Only isolated and qbm_ohmic evolve the ansatz coefficients; the others
attenuate the interference term directly (see overlap.py).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .units import UnitSystem


class EnvironmentError_(ValueError):
    """Invalid environment specification or unsupported operation."""


class UnsupportedKindError(EnvironmentError_):
    pass


VALID_KINDS = ("isolated", "qbm_ohmic", "scattering", "dephasing", "composite")
VALID_COMPOSITE_RULES = ("paper_sum", "product", "max")


@dataclass(frozen=True)
class EnvironmentSpec:
    kind: str
    gamma0: float = 0.0
    kBT: float | None = None
    include_f: bool = False
    Lambda: float = 0.0
    deph_A: float = 0.0
    deph_B: float = 0.0
    deph_omega: float = 1.0
    composite_members: tuple["EnvironmentSpec", ...] = field(default_factory=tuple)
    composite_rule: str = "paper_sum"

    def __post_init__(self):
        if self.kind not in VALID_KINDS:
            raise EnvironmentError_(f"unknown environment kind {self.kind!r}")
        if self.kind == "qbm_ohmic":
            if self.gamma0 < 0.0:
                raise EnvironmentError_("gamma0 must be >= 0")
            if self.kBT is None or not self.kBT > 0.0:
                raise EnvironmentError_("qbm_ohmic requires kBT > 0")
        if self.kind == "scattering" and self.Lambda < 0.0:
            raise EnvironmentError_("Lambda must be >= 0")
        if self.kind == "composite":
            if not self.composite_members:
                raise EnvironmentError_("composite requires a non-empty member list")
            if any(m.kind == "composite" for m in self.composite_members):
                raise EnvironmentError_("composite members may not themselves be composite")
            if self.composite_rule not in VALID_COMPOSITE_RULES:
                raise EnvironmentError_(f"unknown composite rule {self.composite_rule!r}")
        elif self.composite_members:
            raise EnvironmentError_("composite_members only allowed for kind='composite'")

    @staticmethod
    def isolated() -> "EnvironmentSpec":
        return EnvironmentSpec(kind="isolated")

    @staticmethod
    def qbm(gamma0: float, kBT: float, include_f: bool = False) -> "EnvironmentSpec":
        return EnvironmentSpec(kind="qbm_ohmic", gamma0=gamma0, kBT=kBT, include_f=include_f)

    @staticmethod
    def scattering(Lambda: float) -> "EnvironmentSpec":
        return EnvironmentSpec(kind="scattering", Lambda=Lambda)

    @staticmethod
    def dephasing(deph_A: float, deph_B: float = 0.0, deph_omega: float = 1.0) -> "EnvironmentSpec":
        return EnvironmentSpec(kind="dephasing", deph_A=deph_A, deph_B=deph_B, deph_omega=deph_omega)

    def member(self, kind: str) -> "EnvironmentSpec":
        """Pick a composite member by kind (or self when it already matches)."""
        if self.kind == kind:
            return self
        if self.kind == "composite":
            for m in self.composite_members:
                if m.kind == kind:
                    return m
        raise UnsupportedKindError(f"no {kind!r} member in environment of kind {self.kind!r}")


@dataclass(frozen=True)
class DerivedCoefficients:
    """Constant high-temperature coefficients (gamma, D, f).

    D is always recomputed as 2 M gamma0 kBT / hbar^2, never stored on the
    spec, so the fluctuation-dissipation link cannot silently drift.
    """

    gamma: float
    D: float
    f: float


def derive_coefficients(env: EnvironmentSpec, units: UnitSystem) -> DerivedCoefficients:
    """Master-equation coefficients for the isolated and ohmic-bath models."""
    if env.kind == "isolated":
        return DerivedCoefficients(gamma=0.0, D=0.0, f=0.0)
    if env.kind == "qbm_ohmic":
        D = 2.0 * units.mass * env.gamma0 * env.kBT / units.hbar**2
        f = (1.0 / env.kBT) if env.include_f else 0.0
        return DerivedCoefficients(gamma=env.gamma0, D=D, f=f)
    raise UnsupportedKindError(
        f"environment kind {env.kind!r} has no master-equation coefficients"
    )


def positivity_transient(env: EnvironmentSpec, units: UnitSystem) -> float:
    """Initial timescale hbar / kBT before which high-T results are unreliable.

    Downstream time series flag samples with t below this value as
    pre-transient.
    """
    if env.kind != "qbm_ohmic":
        raise UnsupportedKindError("positivity transient is defined for qbm_ohmic only")
    return units.hbar / env.kBT
