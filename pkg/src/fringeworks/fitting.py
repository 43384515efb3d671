"""Single-parameter least-squares fits of environment models to fringe data.

The physical parameter (gamma0, Lambda, or the dephasing modulus) enters
only through Gamma(t_L); an overall detector scale and baseline offset are
nuisance parameters solved linearly at every objective evaluation, so the
fit compares shapes, never absolute count rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import ExperimentalDataset
from .bessel import bessel_j0
from .environment import EnvironmentSpec
from .geometry import ExperimentGeometry
from .overlap import overlap_at_flight_time
from .pattern import farfield_intensity
from .units import UnitSystem

FIT_PARAMS = ("gamma0", "Lambda", "C_deph")
BRACKET_REL_TOL = 1e-6
FLAT_OBJECTIVE_REL = 1e-12


@dataclass(frozen=True)
class FitResult:
    param_name: str
    best_value: float
    sse: float
    n_eval: int
    bounds: tuple[float, float]
    scale: float
    offset: float
    flags: tuple[str, ...] = ()


def brent_minimize(f, lo: float, hi: float, rel_tol: float = BRACKET_REL_TOL, max_iter: int = 200):
    """Bounded scalar minimization: golden section with parabolic steps.

    Converges when the bracket around the minimum shrinks below rel_tol
    relative to the current best point.  Returns (x, f(x), n_eval).
    """
    golden = 0.3819660112501051
    a, b = lo, hi
    x = w = v = a + golden * (b - a)
    fx = fw = fv = f(x)
    n_eval = 1
    d = e = 0.0
    for _ in range(max_iter):
        mid = 0.5 * (a + b)
        tol1 = rel_tol * abs(x) + 1e-300
        tol2 = 2.0 * tol1
        if abs(x - mid) <= tol2 - 0.5 * (b - a):
            break
        use_golden = True
        if abs(e) > tol1:
            r = (x - w) * (fx - fv)
            q = (x - v) * (fx - fw)
            p = (x - v) * q - (x - w) * r
            q = 2.0 * (q - r)
            if q > 0.0:
                p = -p
            q = abs(q)
            e_prev, e = e, d
            if abs(p) < abs(0.5 * q * e_prev) and q * (a - x) < p < q * (b - x):
                d = p / q
                u = x + d
                if (u - a) < tol2 or (b - u) < tol2:
                    d = tol1 if x < mid else -tol1
                use_golden = False
        if use_golden:
            e = (b - x) if x < mid else (a - x)
            d = golden * e
        u = x + d if abs(d) >= tol1 else x + (tol1 if d > 0.0 else -tol1)
        fu = f(u)
        n_eval += 1
        if fu <= fx:
            if u >= x:
                a = x
            else:
                b = x
            v, w, x = w, x, u
            fv, fw, fx = fw, fx, fu
        else:
            if u < x:
                a = u
            else:
                b = u
            if fu <= fw or w == x:
                v, w = w, u
                fv, fw = fw, fu
            elif fu <= fv or v == x or v == w:
                v, fv = u, fu
    return x, fx, n_eval


def gamma_from_parameter(
    param: str,
    value: float,
    geom: ExperimentGeometry,
    t_L: float,
    units: UnitSystem,
    kBT: float | None = None,
    convention: str = "section_iv",
) -> float:
    """Gamma(t_L) as a function of the single fitted parameter."""
    if param == "gamma0":
        env = EnvironmentSpec.qbm(gamma0=value, kBT=kBT)
    elif param == "Lambda":
        env = EnvironmentSpec.scattering(value)
    elif param == "C_deph":
        return float(np.clip(bessel_j0(value), 0.0, 1.0))
    else:
        raise ValueError(f"unknown fit parameter {param!r}")
    return overlap_at_flight_time(env, geom, t_L, units, convention).value


def _profiled_sse(data: ExperimentalDataset, model: np.ndarray):
    """Weighted SSE with scale and offset solved linearly."""
    w = 1.0 / data.sigma**2
    sw = np.sum(w)
    swm = np.sum(w * model)
    swmm = np.sum(w * model * model)
    swy = np.sum(w * data.counts)
    swmy = np.sum(w * model * data.counts)
    det = sw * swmm - swm**2
    if det <= 0.0:
        scale, offset = 0.0, swy / sw
    else:
        scale = (sw * swmy - swm * swy) / det
        offset = (swy * swmm - swm * swmy) / det
    resid = data.counts - scale * model - offset
    return float(np.sum(w * resid**2)), float(scale), float(offset)


def fit_parameter(
    data: ExperimentalDataset,
    geom: ExperimentGeometry,
    param: str,
    bounds: tuple[float, float],
    units: UnitSystem | None = None,
    kBT: float | None = None,
    convention: str = "section_iv",
    separation_convention: str = "full_2L0",
) -> FitResult:
    """Fit one physical parameter of the far-screen pattern to a dataset."""
    units = units if units is not None else UnitSystem.natural()
    if param not in FIT_PARAMS:
        raise ValueError(f"param must be one of {FIT_PARAMS}")
    lo, hi = bounds
    if not (math.isfinite(lo) and math.isfinite(hi) and 0.0 < lo < hi):
        raise ValueError("bounds must be finite, positive and ordered")
    if len(data.xs) < 10:
        raise ValueError("dataset needs at least 10 points")
    t_L = geom.flight_time(units)
    if t_L is None:
        raise ValueError("fitting needs a flight time (t_L or lambda_dB and L)")

    evals = {"n": 0}

    def objective(value):
        evals["n"] += 1
        gamma = gamma_from_parameter(param, value, geom, t_L, units, kBT, convention)
        model = farfield_intensity(geom, gamma, data.xs, separation_convention, units)
        sse, _, _ = _profiled_sse(data, model)
        return sse

    best, f_best, _ = brent_minimize(objective, lo, hi)
    flags: list[str] = []

    f_lo, f_hi = objective(lo), objective(hi)
    spread = max(f_lo, f_hi, f_best) - min(f_lo, f_hi, f_best)
    if spread <= FLAT_OBJECTIVE_REL * max(abs(f_best), 1.0):
        flags.append("FLAT_OBJECTIVE")
        best = lo if f_lo <= f_hi else hi
    elif f_lo <= f_best:
        flags.append("FLAT_NEAR_LOWER_BOUND")
        best = lo
    elif f_hi < f_best:
        flags.append("FLAT_NEAR_UPPER_BOUND")
        best = hi

    gamma = gamma_from_parameter(param, best, geom, t_L, units, kBT, convention)
    model = farfield_intensity(geom, gamma, data.xs, separation_convention, units)
    sse, scale, offset = _profiled_sse(data, model)
    return FitResult(
        param_name=param, best_value=float(best), sse=sse, n_eval=evals["n"],
        bounds=(lo, hi), scale=scale, offset=offset, flags=tuple(flags),
    )
