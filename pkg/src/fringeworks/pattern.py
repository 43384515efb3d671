"""Two-packet density matrix and screen intensity patterns.

The superposed ansatz with packets at +/- L0 is

    rho(x, x') = 2 e^{-N} e^{-4 L0^2 C} core(u, v)
                 * ( cosh[4 L0 C v - 2 i L0 B u]
                   + e^{-4 L0^2 (A - C)} cosh[4 L0 A u + 2 i L0 B v] )

with core = exp(-A u^2 - i B u v - C v^2), u = x - x', v = x + x'.  Its
diagonal is the screen intensity

    P(x) = 2 e^{-N} e^{-4 L0^2 C} e^{-4 C x^2}
           * ( cosh(8 C L0 x) + Gamma cos(4 B L0 x) ),

where the interference weight Gamma is supplied by the environment model.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .dynamics import AnsatzState, Trajectory
from .environment import EnvironmentSpec
from .geometry import ExperimentGeometry
from .overlap import Overlap, overlap_at
from .units import UnitSystem

NORMALIZATIONS = ("raw", "unit_peak", "unit_area")
SEPARATION_CONVENTIONS = ("full_2L0", "half_L0")

FAR_SCREEN_MIN_RATIO = 10.0


class GammaRangeError(ValueError):
    """Gamma outside [0, 1] fed to an intensity evaluation."""


class GridTooNarrowWarning(UserWarning):
    pass


@dataclass(frozen=True)
class IntensityProfile:
    t: float
    xs: np.ndarray
    values: np.ndarray
    gamma_used: float
    model_tag: str
    normalization: str
    flags: tuple[str, ...] = ()

    def scaled(self, factor: float) -> "IntensityProfile":
        return IntensityProfile(
            t=self.t, xs=self.xs, values=self.values * factor,
            gamma_used=self.gamma_used, model_tag=self.model_tag,
            normalization=self.normalization, flags=self.flags,
        )


def density_matrix(s: AnsatzState, L0: float, x, xp):
    """Complex two-packet reduced density matrix at (x, x')."""
    x = np.asarray(x, dtype=float)
    xp = np.asarray(xp, dtype=float)
    u = x - xp
    v = x + xp
    A, B, C, N = s.A, s.B, s.C, s.traceLog
    core = np.exp(-A * u**2 - 1j * B * u * v - C * v**2)
    direct = np.cosh(4.0 * L0 * C * v - 2.0j * L0 * B * u)
    cross = np.cosh(4.0 * L0 * A * u + 2.0j * L0 * B * v)
    weight = math.exp(-4.0 * L0**2 * (A - C))
    value = 2.0 * math.exp(-N) * math.exp(-4.0 * L0**2 * C) * core * (direct + weight * cross)
    return value if value.ndim else complex(value)


def intensity(s: AnsatzState, L0: float, gamma: float, x):
    """Screen intensity at x with interference weight gamma in [0, 1]."""
    if not (0.0 <= gamma <= 1.0):
        raise GammaRangeError(f"gamma = {gamma} outside [0, 1]")
    x = np.asarray(x, dtype=float)
    A, B, C, N = s.A, s.B, s.C, s.traceLog
    prefactor = 2.0 * math.exp(-N) * math.exp(-4.0 * L0**2 * C)
    value = prefactor * np.exp(-4.0 * C * x**2) * (
        np.cosh(8.0 * C * L0 * x) + gamma * np.cos(4.0 * B * L0 * x)
    )
    return value if value.ndim else float(value)


def default_grid(s: AnsatzState, L0: float, n: int = 2001) -> np.ndarray:
    """Uniform grid over +/-(L0 + 6 sigma_t), sigma_t = sqrt(1 / (8 C))."""
    half = L0 + 6.0 * s.sigma_t
    return np.linspace(-half, half, n)


def _apply_normalization(xs, values, normalization):
    if normalization == "raw":
        return values
    if normalization == "unit_peak":
        return values / np.max(values)
    if normalization == "unit_area":
        return values / np.trapezoid(values, xs)
    raise ValueError(f"unknown normalization {normalization!r}")


def intensity_profile(
    traj: Trajectory,
    env: EnvironmentSpec,
    L0: float,
    t: float,
    grid=None,
    normalization: str = "unit_peak",
    units: UnitSystem | None = None,
    gamma_source: str = "ansatz",
) -> IntensityProfile:
    """Sample the screen intensity at time t with Gamma drawn from env.

    The default grid is 2001 points over +/-(L0 + 6 sigma_t); a supplied
    grid narrower than +/-(L0 + 4 sigma_t) raises GridTooNarrowWarning but
    still evaluates.
    """
    units = units if units is not None else UnitSystem.natural()
    s = traj.state_at(t)
    ov = overlap_at(env, L0, t, units, traj=traj, source=gamma_source)
    gamma = min(ov.value, 1.0)  # UNPHYSICAL_OVERLAP keeps its flag, clamped for sampling
    flags = tuple(f for f in (ov.flag,) if f)
    if grid is None:
        xs = default_grid(s, L0)
    else:
        xs = np.asarray(grid, dtype=float)
        needed = L0 + 4.0 * s.sigma_t
        if xs[0] > -needed or xs[-1] < needed:
            warnings.warn(
                f"grid [{xs[0]}, {xs[-1]}] narrower than +/-{needed}", GridTooNarrowWarning
            )
            flags = flags + ("GRID_TOO_NARROW",)
    values = intensity(s, L0, gamma, xs)
    values = _apply_normalization(xs, values, normalization)
    return IntensityProfile(
        t=t, xs=xs, values=values, gamma_used=gamma,
        model_tag=f"{env.kind}/{gamma_source}" if env.kind == "qbm_ohmic" else env.kind,
        normalization=normalization, flags=flags,
    )


def coefficients_from_experiment(
    geom: ExperimentGeometry, units: UnitSystem | None = None
) -> tuple[float, float, float]:
    """Far-screen pattern coefficients (B_exp, C_exp, far_screen_ratio).

    B_exp = 2 pi / (lambda_dB L) and C_exp = (2 sqrt(2) pi sigma_x0 /
    (lambda_dB L))^2 identify the quadratic-phase and envelope coefficients
    at the flight time.  far_screen_ratio = t_L hbar / (M sigma_x0 L0)
    quantifies the far-screen condition; below 10 the caller gets a warning
    flag from farfield users.
    """
    units = units if units is not None else UnitSystem.natural()
    if geom.lambda_dB is None or geom.L is None:
        raise ValueError("far-screen coefficients need lambda_dB and L")
    lam_L = geom.lambda_dB * geom.L
    B_exp = 2.0 * math.pi / lam_L
    C_exp = (2.0 * math.sqrt(2.0) * math.pi * geom.sigma_x0 / lam_L) ** 2
    t_L = geom.flight_time(units)
    mass = geom.M if geom.M is not None else units.mass
    if t_L is not None:
        ratio = t_L * units.hbar / (mass * geom.sigma_x0 * geom.L0)
    else:
        ratio = math.inf
    return B_exp, C_exp, ratio


def farfield_intensity(
    geom: ExperimentGeometry,
    gamma_tL: float,
    x,
    separation_convention: str = "full_2L0",
    units: UnitSystem | None = None,
):
    """Closed-form far-screen intensity (overall scale left free).

    P(x) = (8 pi sigma^2 / (lambda L)) exp(-(2 sqrt(2) pi sigma x /
    (lambda L))^2) [1 + Gamma cos(2 pi s x / (lambda L))] with s = 2 L0 for
    the default convention (consistent with the dynamical phase
    cos(4 B L0 x) under B = 2 pi / (lambda L)) or s = L0 for the literal
    half-separation form.
    """
    if not (0.0 <= gamma_tL <= 1.0):
        raise GammaRangeError(f"gamma = {gamma_tL} outside [0, 1]")
    if separation_convention not in SEPARATION_CONVENTIONS:
        raise ValueError(f"unknown separation convention {separation_convention!r}")
    if geom.lambda_dB is None or geom.L is None:
        raise ValueError("far-field intensity needs lambda_dB and L")
    x = np.asarray(x, dtype=float)
    lam_L = geom.lambda_dB * geom.L
    s = 2.0 * geom.L0 if separation_convention == "full_2L0" else geom.L0
    envelope = (8.0 * math.pi * geom.sigma_x0**2 / lam_L) * np.exp(
        -((2.0 * math.sqrt(2.0) * math.pi * geom.sigma_x0 * x / lam_L) ** 2)
    )
    value = envelope * (1.0 + gamma_tL * np.cos(2.0 * math.pi * s * x / lam_L))
    return value if value.ndim else float(value)


def farfield_profile(
    geom: ExperimentGeometry,
    gamma: Overlap | float,
    n: int = 2001,
    separation_convention: str = "full_2L0",
    normalization: str = "unit_peak",
    units: UnitSystem | None = None,
    model_tag: str = "farfield",
    half_width: float | None = None,
) -> IntensityProfile:
    """Sampled far-screen profile covering the envelope and several fringes."""
    units = units if units is not None else UnitSystem.natural()
    value = gamma.value if isinstance(gamma, Overlap) else float(gamma)
    lam_L = geom.lambda_dB * geom.L
    env_scale = lam_L / (2.0 * math.sqrt(2.0) * math.pi * geom.sigma_x0)
    s = 2.0 * geom.L0 if separation_convention == "full_2L0" else geom.L0
    period = lam_L / s
    if half_width is None:
        half_width = max(3.0 * env_scale, 3.0 * period)
    xs = np.linspace(-half_width, half_width, n)
    values = farfield_intensity(geom, value, xs, separation_convention, units)
    values = _apply_normalization(xs, values, normalization)
    t_L = geom.flight_time(units)
    return IntensityProfile(
        t=t_L if t_L is not None else math.nan,
        xs=xs, values=values, gamma_used=value, model_tag=model_tag,
        normalization=normalization,
    )
