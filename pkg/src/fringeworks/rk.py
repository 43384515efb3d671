"""Embedded adaptive fifth-order Runge-Kutta (Dormand-Prince 5(4)).

The fifth-order solution is propagated; the difference to the embedded
fourth-order solution drives a PI step-size controller (safety 0.9, step
factor clamped to [0.2, 5.0]).  Each accepted step stores the stage slopes,
from which a quartic interpolant provides dense output over the step.

A non-adaptive fixed-step mode is exposed for convergence-order tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Dormand-Prince 5(4) tableau.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_E = _B5 - _B4

# Dense-output matrix: y(t0 + theta h) = y0 + h * K^T P [theta, theta^2, theta^3, theta^4].
_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0
# PI controller exponents for a 4th-order error estimate.
BETA1 = 0.7 / 5.0
BETA2 = 0.4 / 5.0


class StepUnderflowError(RuntimeError):
    """Step size collapsed below the floating-point floor (stiffness guard)."""

    def __init__(self, t: float):
        self.t = t
        super().__init__(f"step size underflow at t = {t}")


@dataclass(frozen=True)
class _Step:
    t0: float
    h: float
    y0: np.ndarray
    y1: np.ndarray
    K: np.ndarray  # (7, n) stage slopes

    def interpolate(self, t: float) -> np.ndarray:
        theta = (t - self.t0) / self.h
        basis = np.array([theta, theta**2, theta**3, theta**4])
        return self.y0 + self.h * (self.K.T @ _P) @ basis


class DenseSolution:
    """Piecewise quartic interpolant assembled from accepted steps."""

    def __init__(self, steps: list[_Step]):
        if not steps:
            raise ValueError("dense solution needs at least one step")
        self._steps = steps
        self._edges = np.array([s.t0 for s in steps] + [steps[-1].t0 + steps[-1].h])

    @property
    def t_min(self) -> float:
        return self._edges[0]

    @property
    def t_max(self) -> float:
        return self._edges[-1]

    def __call__(self, t: float) -> np.ndarray:
        if not (self.t_min <= t <= self.t_max):
            raise ValueError(f"t = {t} outside the solution span [{self.t_min}, {self.t_max}]")
        i = int(np.searchsorted(self._edges, t, side="right") - 1)
        i = min(max(i, 0), len(self._steps) - 1)
        step = self._steps[i]
        if t == step.t0:
            return step.y0.copy()
        if t == step.t0 + step.h:
            return step.y1.copy()
        return step.interpolate(t)


@dataclass
class IntegrationResult:
    ts: np.ndarray  # accepted step times, ts[0] = t0
    ys: np.ndarray  # (len(ts), n) states at those times
    dense: DenseSolution | None
    n_steps: int
    n_rejected: int


def _error_norm(err, y0, y1, tol):
    scale = tol + tol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def integrate_adaptive(
    f,
    t0: float,
    y0,
    t_end: float,
    tol: float,
    first_step: float | None = None,
    max_steps: int = 1_000_000,
    accept_callback=None,
) -> IntegrationResult:
    """Integrate dy/dt = f(t, y) from t0 to t_end (t_end >= t0).

    tol is used for both the absolute and relative part of the mixed error
    norm.  accept_callback(t, y), when given, runs after every accepted step
    and may raise to abort (used for state-invariant guards).
    """
    y = np.asarray(y0, dtype=float).copy()
    t = float(t0)
    if t_end == t:
        K = np.zeros((7, y.size))
        K[0] = f(t, y)
        step = _Step(t0=t, h=0.0, y0=y.copy(), y1=y.copy(), K=K)
        return IntegrationResult(
            ts=np.array([t]), ys=y[None, :].copy(), dense=DenseSolution([step]),
            n_steps=0, n_rejected=0,
        )

    k1 = np.asarray(f(t, y), dtype=float)
    if first_step is None:
        # Conservative initial guess from the first slope magnitude.
        scale = tol + tol * np.abs(y)
        d0 = np.sqrt(np.mean((y / scale) ** 2))
        d1 = np.sqrt(np.mean((k1 / scale) ** 2))
        h = 0.01 * d0 / d1 if (d0 > 1e-5 and d1 > 1e-5) else 1e-6
        h = min(h, t_end - t)
    else:
        h = min(first_step, t_end - t)

    steps: list[_Step] = []
    ts = [t]
    ys = [y.copy()]
    err_prev = 1.0
    n_rejected = 0
    n_accepted = 0

    for _ in range(max_steps):
        if t >= t_end:
            break
        h = min(h, t_end - t)
        if h <= 16.0 * np.finfo(float).eps * max(abs(t), 1.0):
            raise StepUnderflowError(t)

        K = np.empty((7, y.size))
        K[0] = k1
        for s in range(1, 7):
            K[s] = f(t + _C[s] * h, y + h * (K[:s].T @ _A[s]))
        y1 = y + h * (K.T @ _B5)
        err = h * (K.T @ _E)
        norm = _error_norm(err, y, y1, tol)

        if norm <= 1.0:
            step = _Step(t0=t, h=h, y0=y.copy(), y1=y1.copy(), K=K.copy())
            steps.append(step)
            t = t + h
            y = y1
            k1 = K[6]  # FSAL
            ts.append(t)
            ys.append(y.copy())
            n_accepted += 1
            if accept_callback is not None:
                accept_callback(t, y)
            factor = SAFETY * norm ** (-BETA1) * err_prev**BETA2 if norm > 0.0 else MAX_FACTOR
            err_prev = max(norm, 1e-10)
        else:
            n_rejected += 1
            factor = SAFETY * norm ** (-BETA1)
        h *= min(MAX_FACTOR, max(MIN_FACTOR, factor))
    else:
        raise RuntimeError(f"exceeded {max_steps} steps at t = {t}")

    return IntegrationResult(
        ts=np.array(ts), ys=np.array(ys), dense=DenseSolution(steps),
        n_steps=n_accepted, n_rejected=n_rejected,
    )


def integrate_fixed(f, t0: float, y0, t_end: float, n_steps: int) -> np.ndarray:
    """Non-adaptive mode: n_steps equal steps of the fifth-order formula."""
    y = np.asarray(y0, dtype=float).copy()
    h = (t_end - t0) / n_steps
    t = float(t0)
    for _ in range(n_steps):
        K = np.empty((7, y.size))
        K[0] = f(t, y)
        for s in range(1, 7):
            K[s] = f(t + _C[s] * h, y + h * (K[:s].T @ _A[s]))
        y = y + h * (K.T @ _B5)
        t += h
    return y
