"""Discrete tension fields, the regularised flow and its time steppers.

The projected scheme integrates ``u_t = eps*tau_f(u) + u x tau_f(u)`` in
ambient coordinates and renormalises after every full step.  The ambient
scheme integrates the unconstrained cut-off system inside the tube
``| |v| - 1 | < d`` without any projection.
"""

import functools
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from . import coupling as cpl
from .errors import LeftTube, StepRejected
from .geometry import project_point, second_fundamental_form
from .grid import diff_backward, diff_forward, gradient, laplacian, unit_error

SCHEMES = ("rk4", "euler")
DEFAULT_CFL = 0.1
DEFAULT_TUBE_RADIUS = 0.5
BLOWUP_GUARD = 0.1


def _kernel_views(u, fs, grid):
    n0 = grid.n[0]
    n1 = grid.n[1] if grid.m == 2 else 1
    u3 = np.ascontiguousarray(u, dtype=float).reshape(n0, n1, 3)
    f2 = np.ascontiguousarray(fs.f, dtype=float).reshape(n0, n1)
    df3 = np.ascontiguousarray(fs.df, dtype=float).reshape(grid.m, n0, n1)
    h1 = grid.h[1] if grid.m == 2 else 1.0
    return u3, f2, df3, grid.h[0], h1


@functools.lru_cache(maxsize=16)
def _unit_coupling(grid):
    return cpl.sample(cpl.CouplingSpec.constant(1.0), grid, 0.0)


def tension(u, grid):
    """tau_h(u) = P(u) Delta_h u."""
    return tension_f(u, grid, _unit_coupling(grid))


def tension_f(u, grid, fs):
    """tau_f(u) = f tau(u) + sum_j d_j f nabla_j u."""
    u3, f2, df3, h0, h1 = _kernel_views(u, fs, grid)
    out = np.empty_like(u3)
    _kernels.tension_f(u3, f2, df3, h0, h1, grid.m, out)
    return out.reshape(np.shape(u))


def rhs_and_tension(u, grid, fs, eps):
    u3, f2, df3, h0, h1 = _kernel_views(u, fs, grid)
    out = np.empty_like(u3)
    tau = np.empty_like(u3)
    _kernels.rhs(u3, f2, df3, h0, h1, grid.m, float(eps), out, tau)
    shape = np.shape(u)
    return out.reshape(shape), tau.reshape(shape)


def rhs(u, grid, fs, eps):
    """eps*tau_f + u x tau_f, pointwise."""
    return rhs_and_tension(u, grid, fs, eps)[0]


def lambda_cutoff(s, d):
    """Smooth cut-off in the squared normal distance ``s``.

    Equal to 1 for ``s < (d/2)**2``, 0 for ``s > (3d/4)**2``, and a quintic
    smoothstep in between.
    """
    if not d > 0:
        raise ValueError(f"tube radius must be positive, got {d}")
    s = np.asarray(s, dtype=float)
    lo, hi = (0.5 * d) ** 2, (0.75 * d) ** 2
    x = np.clip((s - lo) / (hi - lo), 0.0, 1.0)
    lam = 1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
    return lam if lam.ndim else float(lam)


def rhs_ambient(v, grid, fs, eps, d=DEFAULT_TUBE_RADIUS):
    """Right-hand side of the unconstrained system in the tube of radius ``d``.

    With ``w = v/|v|`` and ``lam = lambda_cutoff(|v - w|**2, d)``::

        eps f Lap v + eps f lam |grad w|^2 w + eps lam df . grad w + lam w x tau_f(w)

    ``|grad w|^2`` is taken as the mean of the squared one-sided differences,
    which equals ``-<Lap_h w, w>`` for sphere-valued ``w``; the normal parts of
    the first two terms then cancel exactly on the sphere.
    """
    v = np.asarray(v, dtype=float)
    w = project_point(v)
    r = v - w
    s = np.einsum("...i,...i->...", r, r)
    max_rho = float(np.sqrt(s.max()))
    if max_rho >= d:
        raise LeftTube(f"state left the tube: max |rho| = {max_rho:.4g} >= d = {d}", max_rho=max_rho)
    lam = lambda_cutoff(s, d)[..., None]
    f = fs.f[..., None]

    curv = np.zeros_like(w)
    for j in range(grid.m):
        for X in (diff_forward(w, grid, j), diff_backward(w, grid, j)):
            # the flow's sign convention is tau = Lap u - A(u)(du, du)
            curv -= 0.5 * second_fundamental_form(w, X, X)
    grad_w = gradient(w, grid)
    drift = np.einsum("j...,j...i->...i", fs.df, grad_w)
    schrodinger, _ = rhs_and_tension(w, grid, fs, 0.0)
    return eps * f * laplacian(v, grid) + eps * f * lam * curv + eps * lam * drift + lam * schrodinger


@dataclass(frozen=True)
class StepControl:
    dt: float
    cfl: float = DEFAULT_CFL
    scheme: str = "rk4"

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not 0 < self.cfl <= 1:
            raise ValueError(f"cfl coefficient must lie in (0, 1], got {self.cfl}")

    @staticmethod
    def budget(grid, eta, eps):
        """min(h^2) / (eta (1 + eps) 4 m): the dt bound at cfl coefficient 1."""
        return min(h * h for h in grid.h) / (eta * (1.0 + eps) * 4 * grid.m)

    @classmethod
    def default(cls, grid, eta, eps, cfl=DEFAULT_CFL, scheme="rk4"):
        return cls(cfl * cls.budget(grid, eta, eps), cfl, scheme)

    def check(self, grid, eta, eps):
        limit = self.cfl * self.budget(grid, eta, eps)
        if self.dt > limit * (1 + 1e-12):
            raise ValueError(f"dt = {self.dt:.6g} exceeds the stability budget {limit:.6g}")
        return self


@dataclass(frozen=True, eq=False)
class FlowState:
    u: np.ndarray
    t: float = 0.0
    eps: float = 0.0
    step: int = 0

    def __post_init__(self):
        if not 0 <= self.eps < 1:
            raise ValueError(f"eps must lie in [0, 1), got {self.eps}")


@dataclass(frozen=True, eq=False)
class AmbientState:
    v: np.ndarray
    t: float = 0.0
    eps: float = 0.0
    d: float = DEFAULT_TUBE_RADIUS
    step: int = 0

    def __post_init__(self):
        if not 0 <= self.eps < 1:
            raise ValueError(f"eps must lie in [0, 1), got {self.eps}")
        drift = unit_error(self.v)
        if drift >= self.d:
            raise LeftTube(f"state outside the tube: max | |v| - 1 | = {drift:.4g}", self.step, drift)


@functools.lru_cache(maxsize=16)
def _static_samples(spec, grid):
    return cpl.sample(spec, grid, 0.0)


def coupling_at(spec, grid, t):
    if spec.is_static:
        return _static_samples(spec, grid)
    return cpl.sample(spec, grid, t)


def _integrate(F, y, t, dt, scheme):
    if scheme == "euler":
        return y + dt * F(y, t)
    k1 = F(y, t)
    k2 = F(y + (0.5 * dt) * k1, t + 0.5 * dt)
    k3 = F(y + (0.5 * dt) * k2, t + 0.5 * dt)
    k4 = F(y + dt * k3, t + dt)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step(state, grid, spec, control, t_new=None):
    """One projected step; ``t_new`` pins the end time to avoid accumulation drift."""
    eps = state.eps

    def F(y, t):
        return rhs(y, grid, coupling_at(spec, grid, t), eps)

    v = _integrate(F, state.u, state.t, control.dt, control.scheme)
    r = np.sqrt(np.einsum("...i,...i->...", v, v))
    drift = float(np.max(np.abs(r - 1.0)))
    if not drift <= BLOWUP_GUARD:
        raise StepRejected(
            f"step {state.step + 1}: pre-projection norm drift {drift:.4g} exceeds {BLOWUP_GUARD}",
            step_index=state.step + 1,
        )
    t = state.t + control.dt if t_new is None else t_new
    return FlowState(v / r[..., None], t, eps, state.step + 1)


def step_ambient(state, grid, spec, control, t_new=None):
    eps, d = state.eps, state.d

    def F(y, t):
        return rhs_ambient(y, grid, coupling_at(spec, grid, t), eps, d)

    try:
        v = _integrate(F, state.v, state.t, control.dt, control.scheme)
        t = state.t + control.dt if t_new is None else t_new
        return AmbientState(v, t, eps, d, state.step + 1)
    except LeftTube as exc:
        raise LeftTube(f"step {state.step + 1}: {exc}", state.step + 1, exc.max_rho) from None


def plan_steps(T, dt):
    """Number of uniform steps reaching ``T`` with step size at most ``dt``."""
    if T == 0:
        return 0, dt
    nsteps = max(1, int(np.ceil(T / dt - 1e-9)))
    return nsteps, T / nsteps


@dataclass
class Trajectory:
    """Recorded states (every ``sample_interval`` steps and the last one) plus diagnostics."""

    grid: object
    spec: object
    eps: float
    dt: float
    scheme: str = "rk4"
    mode: str = "projected"
    tube_radius: float = DEFAULT_TUBE_RADIUS
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    records: list = field(default_factory=list)
    nsteps: int = 0

    @property
    def final(self):
        return self.states[-1]


def evolve(u0, grid, spec, eps, control, T, sample_interval=1, kmax=2, mode="projected",
           tube_radius=DEFAULT_TUBE_RADIUS, diagnostics=True):
    """Integrate from ``u0`` to time ``T`` with uniform steps of size at most ``control.dt``.

    Step errors propagate with the failing step index; the partial trajectory
    is attached to the exception as ``exc.trajectory``.
    """
    from .diagnostics import record_state

    nsteps, dt = plan_steps(T, control.dt)
    control = StepControl(dt, control.cfl, control.scheme) if nsteps else control
    traj = Trajectory(grid, spec, eps, dt, control.scheme, mode, tube_radius, nsteps=nsteps)
    ambient = mode == "ambient"
    if ambient:
        state = AmbientState(np.array(u0, dtype=float), 0.0, eps, tube_radius)
    else:
        state = FlowState(np.array(u0, dtype=float), 0.0, eps)

    def keep(st):
        values = st.v if ambient else st.u
        traj.times.append(st.t)
        traj.states.append(values)
        traj.steps.append(st.step)
        if diagnostics:
            traj.records.append(record_state(values, grid, spec, st.t, kmax, ambient))

    keep(state)
    advance = step_ambient if ambient else step
    try:
        for n in range(1, nsteps + 1):
            t_new = T if n == nsteps else n * dt
            state = advance(state, grid, spec, control, t_new)
            if n % sample_interval == 0 or n == nsteps:
                keep(state)
    except (StepRejected, LeftTube) as exc:
        exc.trajectory = traj
        raise
    return traj


def run(config, diagnostics=True):
    """Integrate a validated run configuration; see :mod:`nsflab.config`."""
    from .experiments import simulate

    return simulate(config, diagnostics=diagnostics)
