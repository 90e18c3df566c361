"""Orchestration of single runs and the comparison studies built on them."""

import os
import time
from dataclasses import dataclass, field

from . import coupling as cpl
from . import diagnostics as dg
from . import geometry as geo
from . import io
from .config import to_text
from .flow import StepControl, coupling_at, evolve
from .initial import bump


def simulate(config, diagnostics=True):
    """Integrate ``config`` and attach residual columns when requested."""
    traj = evolve(
        config.initial_field(),
        config.grid,
        config.coupling,
        config.eps,
        config.control(),
        config.T,
        sample_interval=config.sample_interval,
        kmax=config.kmax,
        mode=config.mode,
        tube_radius=config.tube_radius,
        diagnostics=diagnostics,
    )
    if diagnostics and config.residuals:
        attach_residuals(traj)
    return traj


def _commuted_applies(traj):
    return traj.eps == 0 and traj.spec.is_static and traj.spec.is_spatially_constant


def attach_residuals(traj):
    """Fill ``residuals`` on every interior record; the endpoints stay empty."""
    commuted = _commuted_applies(traj)
    for i in range(1, len(traj.states) - 1):
        res = traj.records[i].residuals
        res["energy"] = dg.energy_identity_residual(traj, i)
        if commuted:
            res["commuted"] = dg.commuted_equation_residual(traj, i)
    return traj


def snapshot_name(step):
    return f"snap_{step:08d}.nsf"


def write_run(config, traj, outdir=None, wall_time=0.0, **extra):
    """Write the diagnostics CSV, snapshots and manifest of a finished run."""
    out = config.output
    outdir = out.dir if outdir is None else outdir
    os.makedirs(outdir, exist_ok=True)
    ambient = config.mode == "ambient"
    io.write_csv(os.path.join(outdir, out.csv), traj.records, config.kmax, ambient, config.residuals)
    if out.snapshots:
        for step, t, values in zip(traj.steps, traj.times, traj.states):
            io.write_snapshot(os.path.join(outdir, snapshot_name(step)), values, config.grid, t, config.eps)
    io.write_manifest(os.path.join(outdir, out.manifest), to_text(config), wall_time, steps=traj.nsteps,
                      dt=traj.dt, **extra)


def run_and_write(config, outdir=None):
    start = time.perf_counter()
    traj = simulate(config)
    write_run(config, traj, outdir, time.perf_counter() - start)
    return traj


def _sup_distance(a, b):
    return float(geo.geodesic_distance(geo.project_point(a), geo.project_point(b)).max())


# -- epsilon sweep -----------------------------------------------------------------------


@dataclass
class SweepResult:
    eps: list
    distances: list
    dt: float

    @property
    def ordered(self):
        d = self.distances
        return all(a > b for a, b in zip(d, d[1:]))

    @property
    def gate(self):
        """Loose gate: the smallest eps sits closer to the eps = 0 run than the largest."""
        return len(self.distances) < 2 or self.distances[-1] < self.distances[0]


def sweep_eps(config, eps_values):
    """Run every eps from the same data with a common dt; distances to the eps = 0 run at T."""
    eps_values = sorted({float(e) for e in eps_values} | {0.0}, reverse=True)
    _, eta = cpl.bounds(config.coupling, config.grid)
    dt = config.dt or StepControl.default(config.grid, eta, max(eps_values), config.cfl).dt
    finals = {}
    for e in eps_values:
        cfg = config.with_(eps=e, dt=dt)
        finals[e] = evolve(cfg.initial_field(), cfg.grid, cfg.coupling, e, StepControl(dt, 1.0, cfg.scheme),
                           cfg.T, diagnostics=False).final
    positive = [e for e in eps_values if e > 0]
    return SweepResult(positive, [_sup_distance(finals[e], finals[0.0]) for e in positive], dt)


# -- uniqueness pair ----------------------------------------------------------------------


@dataclass
class PairResult:
    theta: float
    series: list
    fit: object
    dt: float


def pair_initial(config, theta, axis=(0.0, 0.0, 1.0)):
    u0 = config.initial_field()
    return u0, (u0 if theta == 0 else geo.rotate(u0, axis, theta))


def uniqueness(config, theta=0.0, axis=(0.0, 0.0, 1.0), dt=None, cross_scheme=True):
    """Run u1 and u2 side by side and record the pair functional at every sample.

    ``theta = 0`` compares the rk4 and euler schemes from identical data
    (or two identical runs when ``cross_scheme`` is off); otherwise u2
    starts from u0 rotated by ``theta`` about ``axis``.
    """
    if config.mode != "projected":
        raise ValueError("pair runs use the projected scheme")
    u1, u2 = pair_initial(config, theta, axis)
    dt = dt or config.control().dt
    schemes = ("rk4", "euler") if theta == 0 and cross_scheme else (config.scheme, config.scheme)
    runs = [
        evolve(u, config.grid, config.coupling, config.eps, StepControl(dt, 1.0, s), config.T,
               sample_interval=config.sample_interval, diagnostics=False)
        for u, s in zip((u1, u2), schemes)
    ]
    series = [
        dg.uniqueness_energy(a, b, config.grid, coupling_at(config.coupling, config.grid, t), t)
        for t, a, b in zip(runs[0].times, runs[0].states, runs[1].states)
    ]
    scale = max(1.0, dg.dirichlet_energy(u1, config.grid, coupling_at(config.coupling, config.grid, 0.0)))
    fit = dg.gronwall_fit([p.t for p in series], [p.energy for p in series], scale)
    return PairResult(theta, series, fit, runs[0].dt)


def write_pair_csv(path, result):
    rows = [(p.t, p.max_distance, p.energy, "1" if p.distance_exceeds_delta0 else "0") for p in result.series]
    io.write_table(path, ["t", "maxdist", "E", "flag"], rows)


# -- expanding tori -------------------------------------------------------------------------


@dataclass
class ExpandResult:
    factors: list
    differences: list

    @property
    def gate(self):
        return len(self.differences) < 2 or self.differences[-1] < self.differences[0]


def _bump_params(config):
    base = config.grid
    params = dict(config.initial.kwargs())
    if config.initial.family not in ("bump", "equator"):
        raise ValueError("the expanding-torus study needs bump or equator initial data")
    if config.initial.family == "equator":
        params["amplitude"] = 0.0
    params.setdefault("period", base.L[0])
    params.setdefault("center", (0.5 * params["period"],) * base.m)
    params.setdefault("radius", 0.25 * params["period"])
    return params


def expand_torus(config, factors):
    """Same spacing, periods scaled by each factor; sup distance on the base window."""
    factors = [int(k) for k in factors]
    params = _bump_params(config)
    window = tuple(slice(0, nj) for nj in config.grid.n)
    finals = []
    for k in factors:
        grid = config.grid.scaled(k)
        spec = config.coupling.scaled(k)
        _, eta = cpl.bounds(spec, grid)
        control = StepControl(config.dt, 1.0, config.scheme) if config.dt else \
            StepControl.default(grid, eta, config.eps, config.cfl, config.scheme)
        u0 = bump(grid, **params)
        finals.append(evolve(u0, grid, spec, config.eps, control, config.T, diagnostics=False).final[window])
    diffs = [_sup_distance(a, b) for a, b in zip(finals, finals[1:])]
    return ExpandResult(factors, diffs)


# -- tube monotonicity ------------------------------------------------------------------------


@dataclass
class TubeResult:
    times: list
    energies: list
    slack: float
    static: bool
    violations: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.violations


def tube_study(config):
    """Ambient run; with static f the tube energy must not increase beyond the slack."""
    if config.mode != "ambient":
        config = config.with_(mode="ambient")
    traj = simulate(config)
    energies = [r.tube_energy for r in traj.records]
    scale = max(dg.tube_gradient_scale(v, config.grid) for v in traj.states)
    slack = 10.0 * traj.dt**2 * scale
    static = config.coupling.is_static
    violations = []
    if static:
        violations = [i + 1 for i, (a, b) in enumerate(zip(energies, energies[1:])) if b > a + slack]
    return TubeResult(list(traj.times), energies, slack, static, violations), traj


def gn_check(grid, exponents, count=200, seed=0, kappa_max=6.0):
    return dg.gn_ensemble_max(grid, exponents, count, seed, kappa_max)
