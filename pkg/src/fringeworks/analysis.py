"""Fringe extraction, visibility traces, and experimental datasets.

Visibility follows the contrast definition nu = (Imax - Imin) / (Imax +
Imin) over neighbouring fringes; when a maximum has minima on both sides
their average is used, which keeps nu symmetric under envelope tilt.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import Trajectory
from .environment import EnvironmentSpec
from .geometry import ExperimentGeometry
from .pattern import IntensityProfile, intensity_profile
from .units import UnitSystem

PLATEAU_REL_TOL = 1e-14


class MissingFringeError(ValueError):
    """The requested fringe index has no extremum in the profile."""


@dataclass(frozen=True)
class Extremum:
    x: float
    I: float
    kind: str  # "max" | "min"
    fringe_index: int


@dataclass(frozen=True)
class ExtremaList:
    entries: tuple[Extremum, ...]

    def maxima(self) -> list[Extremum]:
        return [e for e in self.entries if e.kind == "max"]

    def get(self, fringe_index: int, kind: str | None = None) -> Extremum:
        for e in self.entries:
            if e.fringe_index == fringe_index and (kind is None or e.kind == kind):
                return e
        raise MissingFringeError(f"no extremum with fringe_index {fringe_index}")


def _collapse_plateaus(xs, values):
    """Merge runs of numerically flat samples into their midpoints."""
    tol = PLATEAU_REL_TOL * np.max(np.abs(values))
    keep_x, keep_v = [xs[0]], [values[0]]
    i = 1
    while i < len(values):
        if abs(values[i] - keep_v[-1]) <= tol:
            j = i
            while j < len(values) and abs(values[j] - keep_v[-1]) <= tol:
                j += 1
            mid = 0.5 * (keep_x[-1] + xs[j - 1])
            keep_x[-1] = mid
            i = j
        else:
            keep_x.append(xs[i])
            keep_v.append(values[i])
            i += 1
    return np.array(keep_x), np.array(keep_v)


def find_extrema(profile: IntensityProfile) -> ExtremaList:
    """Locate interior extrema by first-difference sign change.

    Positions and heights are refined with a three-point parabola through
    the neighbouring samples.  An empty list (no interior extrema) is a
    valid result, not an error.
    """
    xs, values = profile.xs, profile.values
    if len(xs) < 5:
        raise ValueError("profile needs at least 5 points")
    xs, values = _collapse_plateaus(np.asarray(xs, float), np.asarray(values, float))

    raw: list[tuple[float, float, str]] = []
    d = np.diff(values)
    for i in range(1, len(d)):
        if d[i - 1] == 0.0 or d[i] == 0.0 or (d[i - 1] > 0) == (d[i] > 0):
            continue
        kind = "max" if d[i - 1] > 0 else "min"
        xl, xc, xr = xs[i - 1], xs[i], xs[i + 1]
        yl, yc, yr = values[i - 1], values[i], values[i + 1]
        denom = (yr - yc) / (xr - xc) - (yc - yl) / (xc - xl)
        if denom != 0.0:
            # Vertex of the interpolating parabola (general spacing).
            a = denom / (xr - xl)
            b = (yr - yc) / (xr - xc) - a * (xr + xc)
            x_star = -b / (2.0 * a)
            if not (xl < x_star < xr):
                x_star = xc
            c0 = yc - a * xc**2 - b * xc
            y_star = a * x_star**2 + b * x_star + c0
        else:
            x_star, y_star = xc, yc
        raw.append((x_star, y_star, kind))

    if not raw:
        return ExtremaList(entries=())
    raw.sort(key=lambda e: e[0])
    central = min(range(len(raw)), key=lambda i: abs(raw[i][0]))
    entries = tuple(
        Extremum(x=x, I=y, kind=k, fringe_index=i - central)
        for i, (x, y, k) in enumerate(raw)
    )
    kinds = [e.kind for e in entries]
    assert all(a != b for a, b in zip(kinds, kinds[1:])), "extrema kinds must alternate"
    return ExtremaList(entries=entries)


def fringe_visibility(profile: IntensityProfile, fringe_index: int = 1) -> float:
    """Contrast (Imax - Imin) / (Imax + Imin) at the indexed maximum.

    fringe_index counts maxima outward from the centre: 0 is the maximum
    nearest x = 0, +k the k-th maximum on the +x side (-k mirrors).  Uses
    the average of both adjacent minima when available.  Exactly invariant
    under uniform rescaling of the profile.
    """
    extrema = find_extrema(profile)
    maxima = extrema.maxima()
    if not maxima:
        raise MissingFringeError("profile has no interior maximum")
    if fringe_index == 0:
        target = min(maxima, key=lambda e: abs(e.x))
    else:
        eps = 0.5 * abs(profile.xs[1] - profile.xs[0])
        if fringe_index > 0:
            side = sorted((e for e in maxima if e.x > eps), key=lambda e: e.x)
        else:
            side = sorted((e for e in maxima if e.x < -eps), key=lambda e: -e.x)
        k = abs(fringe_index)
        if len(side) < k:
            raise MissingFringeError(f"no maximum at fringe index {fringe_index}")
        target = side[k - 1]
    eps = 0.5 * abs(profile.xs[1] - profile.xs[0])
    i = extrema.entries.index(target)
    neighbours = []
    # A neighbouring minimum only counts as a fringe node away from x = 0;
    # the central dip between two still-separated packets is envelope
    # structure, not an interference minimum.
    if i - 1 >= 0 and extrema.entries[i - 1].kind == "min" and abs(extrema.entries[i - 1].x) > eps:
        neighbours.append(extrema.entries[i - 1].I)
    if i + 1 < len(extrema.entries) and extrema.entries[i + 1].kind == "min" and abs(extrema.entries[i + 1].x) > eps:
        neighbours.append(extrema.entries[i + 1].I)
    if not neighbours:
        raise MissingFringeError(f"maximum at index {fringe_index} has no adjacent fringe minimum")
    i_min = sum(neighbours) / len(neighbours)
    i_max = target.I
    return (i_max - i_min) / (i_max + i_min)


def visibility_theoretical(gamma: float, C_t: float, L0: float, x: float) -> float:
    """Slowly-varying-envelope visibility Gamma / cosh(8 L0 C x)."""
    if not (0.0 <= gamma <= 1.0):
        raise ValueError(f"gamma = {gamma} outside [0, 1]")
    return gamma / math.cosh(8.0 * L0 * C_t * x)


@dataclass(frozen=True)
class VisibilityTrace:
    times: np.ndarray
    nu_values: np.ndarray
    feature: int
    model_tag: str
    truncated_reason: str | None = None


def visibility_trace(
    traj: Trajectory,
    env: EnvironmentSpec,
    geom: ExperimentGeometry,
    times,
    fringe_index: int = 1,
    units: UnitSystem | None = None,
    gamma_source: str = "ansatz",
) -> VisibilityTrace:
    """Track the visibility of one fringe (fixed index, not fixed position).

    Before the tracked fringe first appears nu is reported as 0 (no
    contrast yet); once it has appeared, losing it truncates the trace with
    reason "fringe_lost".
    """
    units = units if units is not None else UnitSystem.natural()
    times = np.asarray(times, dtype=float)
    nus: list[float] = []
    seen = False
    reason = None
    kept: list[float] = []
    for t in times:
        profile = intensity_profile(
            traj, env, geom.L0, float(t), units=units, gamma_source=gamma_source
        )
        try:
            nu = fringe_visibility(profile, fringe_index)
        except MissingFringeError:
            if seen:
                reason = "fringe_lost"
                break
            nu = 0.0
        else:
            seen = True
        kept.append(float(t))
        nus.append(nu)
    tag = f"{env.kind}/{gamma_source}" if env.kind == "qbm_ohmic" else env.kind
    return VisibilityTrace(
        times=np.array(kept), nu_values=np.array(nus), feature=fringe_index,
        model_tag=tag, truncated_reason=reason,
    )


# --- experimental data -----------------------------------------------------

@dataclass(frozen=True)
class ExperimentalDataset:
    xs: np.ndarray
    counts: np.ndarray
    sigma: np.ndarray
    meta: str = ""

    def __post_init__(self):
        if len(self.xs) != len(self.counts) or len(self.xs) != len(self.sigma):
            raise ValueError("xs, counts and sigma must have equal length")
        if np.any(np.diff(self.xs) <= 0.0):
            raise ValueError("xs must be strictly increasing")
        if np.any(self.counts < 0.0):
            raise ValueError("counts must be >= 0")

    @staticmethod
    def from_counts(xs, counts, sigma=None, meta: str = "") -> "ExperimentalDataset":
        xs = np.asarray(xs, dtype=float)
        counts = np.asarray(counts, dtype=float)
        if sigma is None:
            sigma = np.sqrt(np.maximum(counts, 1.0))
        return ExperimentalDataset(xs=xs, counts=counts, sigma=np.asarray(sigma, float), meta=meta)


def synthetic_dataset(
    model_values: np.ndarray,
    xs: np.ndarray,
    noise_frac: float,
    seed: int,
    scale: float = 1000.0,
    meta: str = "synthetic",
) -> ExperimentalDataset:
    """Noisy counts from a model curve: multiplicative Gaussian, seeded.

    counts = scale * model * (1 + noise_frac * N(0, 1)) clipped at zero,
    reproducible for a fixed seed.
    """
    rng = np.random.default_rng(seed)
    noise = 1.0 + noise_frac * rng.standard_normal(len(xs))
    counts = np.maximum(scale * model_values * noise, 0.0)
    return ExperimentalDataset.from_counts(xs, counts, meta=meta)
