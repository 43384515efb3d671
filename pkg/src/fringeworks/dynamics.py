"""Gaussian-ansatz coefficient dynamics for the reduced density matrix.

The single-packet ansatz (hbar = M = 1)

    rho(x, x', t) = exp(-N) * exp(-A u^2 - i B u v - C v^2),
    u = x - x',  v = x + x'

inserted into the Brownian-motion master equation closes on four real ODEs.
With the mixed derivative d_x^2 - d_x'^2 = 4 d_u d_v and the dissipator
written in (u, v), matching powers of u^2, uv, v^2 and the constant gives

    dA/dt = 4 A B - 4 gamma A + D/4 - 4 f B
    dB/dt = 2 B^2 - 8 A C - 2 gamma B + 8 f C
    dC/dt = 4 B C
    dN/dt = -2 B

which conserves the trace exp(-N) * (1/2) sqrt(pi / C) identically.  The
anomalous-diffusion term only closes on real coefficients with an imaginary
prefactor, 2 i f (x - x') (d_x + d_x'); that convention is adopted here and
f defaults to zero.  master_equation_residual() certifies the closure
independently, through analytic spatial derivatives of the ansatz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .environment import DerivedCoefficients, EnvironmentSpec, derive_coefficients, positivity_transient
from .geometry import ExperimentGeometry
from .rk import DenseSolution, StepUnderflowError, integrate_adaptive
from .units import UnitSystem

TOL_MIN = 1e-12
TOL_MAX = 1e-3


class InvariantViolationError(RuntimeError):
    """A or C left the positive domain during integration."""

    def __init__(self, t: float, state):
        self.t = t
        self.state = state
        super().__init__(f"Gaussian normalizability lost at t = {t}: A = {state[0]}, C = {state[2]}")


@dataclass(frozen=True)
class AnsatzState:
    """Coefficients (A, B, C, traceLog) of the Gaussian ansatz at time t."""

    t: float
    A: float
    B: float
    C: float
    traceLog: float

    def __post_init__(self):
        if not (self.A > 0.0 and self.C > 0.0):
            raise ValueError(f"A and C must be > 0 (got A = {self.A}, C = {self.C})")

    @property
    def trace(self) -> float:
        """Trace of the single-packet density matrix, conserved along trajectories."""
        return math.exp(-self.traceLog) * 0.5 * math.sqrt(math.pi / self.C)

    @property
    def sigma_t(self) -> float:
        """Ensemble width sqrt(1 / (8 C))."""
        return math.sqrt(1.0 / (8.0 * self.C))

    def as_array(self) -> np.ndarray:
        return np.array([self.A, self.B, self.C, self.traceLog])


def initial_state(geom: ExperimentGeometry, convention: str = "physical") -> AnsatzState:
    """Initial ansatz coefficients.

    "physical" reads A(0) = C(0) = 1 / (8 sigma_x0^2) off the pure-state
    packet exp(-x^2 / (4 sigma^2)); "paper" pins A(0) = C(0) = 1 regardless
    of sigma_x0, reproducing the published runs literally.  Both set B = 0
    and normalize the single-packet trace to one.
    """
    if convention == "physical":
        a0 = 1.0 / (8.0 * geom.sigma_x0**2)
    elif convention == "paper":
        a0 = 1.0
    else:
        raise ValueError(f"unknown initial-state convention {convention!r}")
    trace_log = math.log(0.5 * math.sqrt(math.pi / a0))
    return AnsatzState(t=0.0, A=a0, B=0.0, C=a0, traceLog=trace_log)


def coefficient_derivatives(s: AnsatzState, coeffs: DerivedCoefficients) -> tuple[float, float, float, float]:
    """Time derivatives (dA, dB, dC, dTraceLog) of the closed ODE system."""
    A, B, C = s.A, s.B, s.C
    g, D, f = coeffs.gamma, coeffs.D, coeffs.f
    dA = 4.0 * A * B - 4.0 * g * A + D / 4.0 - 4.0 * f * B
    dB = 2.0 * B**2 - 8.0 * A * C - 2.0 * g * B + 8.0 * f * C
    dC = 4.0 * B * C
    dN = -2.0 * B
    return dA, dB, dC, dN


def _rhs(coeffs: DerivedCoefficients):
    g, D, f = coeffs.gamma, coeffs.D, coeffs.f

    def rhs(t, y):
        A, B, C, _ = y
        return np.array(
            [
                4.0 * A * B - 4.0 * g * A + D / 4.0 - 4.0 * f * B,
                2.0 * B**2 - 8.0 * A * C - 2.0 * g * B + 8.0 * f * C,
                4.0 * B * C,
                -2.0 * B,
            ]
        )

    return rhs


class Trajectory:
    """Integrated coefficient history with dense evaluation inside the span."""

    def __init__(
        self,
        env: EnvironmentSpec,
        tol: float,
        ts: np.ndarray,
        ys: np.ndarray,
        dense: DenseSolution,
        pre_transient: float,
    ):
        self.env = env
        self.tol = tol
        self.ts = ts
        self.ys = ys
        self._dense = dense
        self.pre_transient = pre_transient

    @property
    def t0(self) -> float:
        return float(self.ts[0])

    @property
    def t_end(self) -> float:
        return float(self.ts[-1])

    @property
    def samples(self) -> list[AnsatzState]:
        return [
            AnsatzState(t=float(t), A=y[0], B=y[1], C=y[2], traceLog=y[3])
            for t, y in zip(self.ts, self.ys)
        ]

    def state_at(self, t: float) -> AnsatzState:
        i = np.searchsorted(self.ts, t)
        if i < len(self.ts) and self.ts[i] == t:
            y = self.ys[i]
        else:
            y = self._dense(t)
        return AnsatzState(t=float(t), A=y[0], B=y[1], C=y[2], traceLog=y[3])

    def is_pre_transient(self, t: float) -> bool:
        return t < self.pre_transient


def integrate(
    s0: AnsatzState,
    env: EnvironmentSpec,
    t_end: float,
    tol: float = 1e-9,
    units: UnitSystem | None = None,
) -> Trajectory:
    """Evolve the ansatz coefficients from s0.t to t_end at the given tolerance.

    Raises StepUnderflowError on step collapse (stiffness guard) and
    InvariantViolationError if A or C leaves the positive domain.
    t_end == s0.t returns a one-sample trajectory.
    """
    if t_end < s0.t:
        raise ValueError(f"t_end = {t_end} precedes the initial time {s0.t}")
    if not (TOL_MIN <= tol <= TOL_MAX):
        raise ValueError(f"tol must lie in [{TOL_MIN}, {TOL_MAX}], got {tol}")
    units = units if units is not None else UnitSystem.natural()
    coeffs = derive_coefficients(env, units)

    def guard(t, y):
        if y[0] <= 0.0 or y[2] <= 0.0:
            raise InvariantViolationError(t, y)

    result = integrate_adaptive(
        _rhs(coeffs), s0.t, s0.as_array(), t_end, tol, accept_callback=guard
    )
    if env.kind == "qbm_ohmic":
        transient = positivity_transient(env, units)
    else:
        transient = 0.0
    return Trajectory(env=env, tol=tol, ts=result.ts, ys=result.ys, dense=result.dense,
                      pre_transient=transient)


def free_gaussian_reference(sigma0: float, t: float) -> AnsatzState:
    """Exact isolated-evolution state: the analytic oracle for integrate().

    Free spreading of a pure packet of initial width sigma0 (hbar = M = 1):
    sigma_t^2 = sigma0^2 + t^2 / (4 sigma0^2), A = C = 1 / (8 sigma_t^2),
    B = -t / (8 sigma0^2 sigma_t^2), traceLog fixed by trace conservation.
    """
    if not sigma0 > 0.0:
        raise ValueError("sigma0 must be > 0")
    sig_t2 = sigma0**2 + t**2 / (4.0 * sigma0**2)
    a = 1.0 / (8.0 * sig_t2)
    b = -t / (8.0 * sigma0**2 * sig_t2)
    trace_log = math.log(0.5 * math.sqrt(math.pi / a))
    return AnsatzState(t=t, A=a, B=b, C=a, traceLog=trace_log)


# --- master-equation residual oracle -------------------------------------

def _component_fields(s, dsdt, a, b, x, xp):
    """Value, d/dt, and analytic spatial derivatives of one displaced ansatz.

    The component is exp(S) with S = -N - A u^2 - i B u v - C v^2 evaluated
    at u = (x - a) - (x' - b), v = (x - a) + (x' - b).  Returns everything
    the master-equation operator needs at (x, x').
    """
    A, B, C, N = s.A, s.B, s.C, s.traceLog
    dA, dB, dC, dN = dsdt
    u = (x - a) - (xp - b)
    v = (x - a) + (xp - b)
    S = -N - A * u**2 - 1j * B * u * v - C * v**2
    rho = np.exp(S)

    S_u = -2.0 * A * u - 1j * B * v
    S_v = -1j * B * u - 2.0 * C * v
    S_uu = -2.0 * A
    S_vv = -2.0 * C
    S_uv = -1j * B

    # d/dx = d/du + d/dv, d/dx' = -d/du + d/dv on the shifted arguments.
    Sx = S_u + S_v
    Sxp = -S_u + S_v
    Sxx = S_uu + 2.0 * S_uv + S_vv
    Sxpxp = S_uu - 2.0 * S_uv + S_vv

    rho_t = rho * (-dN - dA * u**2 - 1j * dB * u * v - dC * v**2)
    rho_x = rho * Sx
    rho_xp = rho * Sxp
    rho_xx = rho * (Sx**2 + Sxx)
    rho_xpxp = rho * (Sxp**2 + Sxpxp)
    return rho, rho_t, rho_x, rho_xp, rho_xx, rho_xpxp, u


def master_equation_residual(
    traj: Trajectory,
    t: float,
    grid,
    L0: float,
    packets: str = "single",
    units: UnitSystem | None = None,
    derivative_override=None,
) -> float:
    """Normalized master-equation residual of the ansatz at time t.

    Evaluates d rho/dt (chain rule through the coefficient derivatives)
    minus the master-equation operator applied with analytic spatial
    derivatives, and returns max|residual| / max|rho| over the grid of
    (x, x') points.  This is the independent certificate of the ODE closure:
    the operator side never references the ODE formulas.

    packets = "single" checks the one-packet form literally.  packets =
    "two" checks the superposed two-packet form component by component: the
    operator's explicit (x - x') factors act relative to each component's
    coherence displacement (u -/+ 2 L0 for the cross components), which is
    the identity the superposed solution actually satisfies -- the
    undisplaced dissipator is not translation invariant in u, so the cross
    packets obey it only in their own displaced frame.

    derivative_override(state, coeffs), when given, replaces
    coefficient_derivatives on the d rho/dt side; mutation tests use it to
    show a corrupted closure is detected.
    """
    if packets not in ("single", "two"):
        raise ValueError(f"unknown packets mode {packets!r}")
    xs, xps = grid
    xs = np.asarray(xs, dtype=float)
    xps = np.asarray(xps, dtype=float)
    if xs.size == 0 or xps.size == 0:
        raise ValueError("empty residual grid")
    units = units if units is not None else UnitSystem.natural()
    if not (traj.t0 <= t <= traj.t_end):
        raise ValueError(f"t = {t} outside the trajectory span")

    s = traj.state_at(t)
    coeffs = derive_coefficients(traj.env, units)
    deriv_fn = derivative_override if derivative_override is not None else coefficient_derivatives
    dsdt = deriv_fn(s, coeffs)

    X, XP = np.meshgrid(xs, xps, indexing="ij")
    if packets == "single":
        displacements = [(0.0, 0.0)]
    else:
        displacements = [(L0, L0), (-L0, -L0), (L0, -L0), (-L0, L0)]

    g, D, f = coeffs.gamma, coeffs.D, coeffs.f
    hbar, mass = units.hbar, units.mass
    residual = np.zeros_like(X, dtype=complex)
    total = np.zeros_like(X, dtype=complex)
    for a, b in displacements:
        rho, rho_t, rho_x, rho_xp, rho_xx, rho_xpxp, u = _component_fields(s, dsdt, a, b, X, XP)
        op = (
            0.5j * hbar / mass * (rho_xx - rho_xpxp)
            - (D / 4.0) * u**2 * rho
            - g * u * (rho_x - rho_xp)
            + 2.0j * f * u * (rho_x + rho_xp)
        )
        residual += rho_t - op
        total += rho

    return float(np.max(np.abs(residual)) / np.max(np.abs(total)))


def residual_grid(L0: float, sigma: float, n: int = 21):
    """Default n x n residual grid covering +/-(L0 + 6 sigma) in x and x'."""
    half = L0 + 6.0 * sigma
    xs = np.linspace(-half, half, n)
    return xs, xs.copy()
