"""Closed-form comparison ODEs and a supersolution checker.

The constants D, Q, A, B are inputs: they are never derived from data.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import BeyondBlowup, DomainExceeded, NoBlowup

Q_LINEAR_TOL = 1e-9
SMALL_B = 1e-8


@dataclass(frozen=True)
class NonlinearOde:
    """dU/dt = D (1 + U)^Q with U(0) = U0."""

    D: float
    Q: float
    U0: float = 0.0

    def __post_init__(self):
        for name in ("D", "Q", "U0"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not self.D > 0:
            raise ValueError(f"D must be positive, got {self.D}")
        if not self.Q > 0:
            raise ValueError(f"Q must be positive, got {self.Q}")
        if self.U0 < 0:
            raise ValueError(f"U0 must be non-negative, got {self.U0}")

    def rhs(self, U):
        return self.D * (1.0 + U) ** self.Q


@dataclass(frozen=True)
class LinearCascadeOde:
    """dU/dt = A + B U with U(0) = U0."""

    A: float
    B: float
    U0: float = 0.0

    def __post_init__(self):
        for name in ("A", "B", "U0"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and non-negative, got {v}")

    def rhs(self, U):
        return self.A + self.B * U


def blowup_time(ode, infinite_ok=False):
    """t* = 1 / ((Q - 1) D (1 + U0)^(Q - 1)); raises NoBlowup when Q <= 1."""
    if isinstance(ode, LinearCascadeOde) or ode.Q <= 1.0 + Q_LINEAR_TOL:
        if infinite_ok:
            return math.inf
        raise NoBlowup("the comparison ODE grows at most exponentially; no finite blow-up")
    return 1.0 / ((ode.Q - 1.0) * ode.D * (1.0 + ode.U0) ** (ode.Q - 1.0))


def safe_horizon(ode, horizon):
    """min{t*/2, T*}: the existence time the a priori bound guarantees."""
    return min(0.5 * blowup_time(ode, infinite_ok=True), horizon)


def nonlinear_supersolution(ode, t):
    """U(t) = (1 + U0) / (1 - (Q-1) D (1+U0)^(Q-1) t)^(1/(Q-1)) - 1."""
    t = float(t)
    if t < 0:
        raise ValueError("t must be non-negative")
    base = 1.0 + ode.U0
    if abs(ode.Q - 1.0) <= Q_LINEAR_TOL:
        return base * math.exp(ode.D * t) - 1.0
    denom = 1.0 - (ode.Q - 1.0) * ode.D * base ** (ode.Q - 1.0) * t
    if denom <= 0.0:
        raise BeyondBlowup(f"t = {t!r} is at or past the blow-up time {blowup_time(ode)!r}")
    return base / denom ** (1.0 / (ode.Q - 1.0)) - 1.0


def linear_cascade_solution(ode, t):
    """U(t) = U0 e^{Bt} + (A/B)(e^{Bt} - 1), with the B -> 0 limit taken by series."""
    t = float(t)
    if t < 0:
        raise ValueError("t must be non-negative")
    x = ode.B * t
    if ode.B < SMALL_B:
        # (e^x - 1)/B = t (1 + x/2 + x^2/6 + ...)
        return ode.U0 * math.exp(x) + ode.A * t * (1.0 + x / 2.0 + x * x / 6.0)
    return ode.U0 * math.exp(x) + (ode.A / ode.B) * math.expm1(x)


def solution(ode, t):
    if isinstance(ode, LinearCascadeOde):
        return linear_cascade_solution(ode, t)
    return nonlinear_supersolution(ode, t)


@dataclass
class SupersolutionReport:
    passed: bool
    checked: int
    first_violation: int = None
    t_violation: float = None
    y_violation: float = None
    bound_violation: float = None
    max_excess: float = -math.inf


def verify_supersolution(times, values, ode, rtol=1e-9):
    """Check y_i <= U(t_i) + rtol (1 + |U(t_i)|) along a recorded series."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.shape != values.shape:
        raise ValueError("times and values must have the same length")
    tstar = blowup_time(ode, infinite_ok=True)
    if np.any(times >= tstar):
        raise DomainExceeded(f"series reaches t = {float(times.max())!r} beyond the blow-up time {tstar!r}")
    report = SupersolutionReport(True, len(times))
    for i, (t, y) in enumerate(zip(times, values)):
        U = solution(ode, t)
        excess = y - U
        report.max_excess = max(report.max_excess, excess)
        if excess > rtol * (1.0 + abs(U)) and report.passed:
            report.passed = False
            report.first_violation = i
            report.t_violation = float(t)
            report.y_violation = float(y)
            report.bound_violation = U
    return report


def rk4_solve(ode, U0, times, substeps=200):
    """Integrate the ODE from ``U0`` with classical RK4; returns values at ``times``."""
    out = [float(U0)]
    U = float(U0)
    for t0, t1 in zip(times[:-1], times[1:]):
        h = (t1 - t0) / substeps
        for _ in range(substeps):
            k1 = ode.rhs(U)
            k2 = ode.rhs(U + 0.5 * h * k1)
            k3 = ode.rhs(U + 0.5 * h * k2)
            k4 = ode.rhs(U + h * k3)
            U += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(U)
    return np.array(out)
