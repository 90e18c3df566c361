import math

import numpy as np
import pytest

from nsflab import coupling as cpl
from nsflab import flow, initial
from nsflab.errors import LeftTube, StepRejected
from nsflab.grid import TorusGrid, unit_error

TWO_PI = 2 * math.pi
ONE = cpl.CouplingSpec.constant(1.0)
TWO_PLUS_SIN = cpl.CouplingSpec(2.0, (cpl.CouplingTerm(1.0, (1,), (-math.pi / 2,)),))


def line(n):
    return TorusGrid((n,), (TWO_PI,))


def unit_fs(grid):
    return cpl.sample(ONE, grid, 0.0)


def test_tension_constant_and_equator():
    g = line(64)
    assert np.all(flow.tension(initial.constant(g), g) == 0)
    # a constant-speed great circle is harmonic for the discrete tension as well:
    # what remains is rounding amplified by 1/h^2
    for n in (64, 128):
        g = line(n)
        for w in (1, 2):
            assert np.abs(flow.tension(initial.equator(g, winding=w), g)).max() < 1e-13 / g.h[0] ** 2


def test_tension_sphere_identity():
    # P(u) Lap u = Lap u + |grad u|^2 u up to O(h^2)
    from nsflab.grid import higher_covariant_norms, laplacian

    errs = []
    for n in (32, 64, 128):
        g = line(n)
        u = initial.rotated(g, theta=0.6)
        lap = laplacian(u, g)
        (g2,) = higher_covariant_norms(u, g, 1)
        errs.append(np.abs(flow.tension(u, g) - (lap + g2[..., None] * u)).max())
    assert errs[0] / errs[1] > 3 and errs[1] / errs[2] > 3


def test_tension_f_equator_oracle():
    g = line(128)
    (x,) = g.coords()
    fs = cpl.sample(TWO_PLUS_SIN, g, 0.0)
    tau = flow.tension_f(initial.equator(g), g, fs)
    expected = np.cos(x)[:, None] * np.stack([-np.sin(x), np.cos(x), 0 * x], axis=-1)
    assert np.abs(tau - expected).max() < 1e-3
    assert np.all(flow.tension_f(initial.constant(g), g, fs) == 0)


@pytest.mark.parametrize("eps", [0.0, 0.3, 0.5, 0.9])
def test_rhs_norm_identity(eps):
    g = TorusGrid((24, 16), (TWO_PI, 2.0))
    spec = cpl.CouplingSpec(2.0, (cpl.CouplingTerm(0.8, (1, 1), (0.2, 0.0)),))
    fs = cpl.sample(spec, g, 0.0)
    u = initial.random_map(g, seed=11)
    r, tau = flow.rhs_and_tension(u, g, fs, eps)
    t2 = np.sum(tau * tau, axis=-1)
    assert np.abs(np.sum(r * r, axis=-1) - (1 + eps**2) * t2).max() < 1e-12 * t2.max()
    if eps == 0:
        assert np.abs(np.sum(r * tau, axis=-1)).max() < 1e-12 * t2.max()
    assert np.all(flow.rhs(initial.constant(g), g, fs, eps) == 0)


def test_lambda_cutoff():
    d = 0.5
    assert flow.lambda_cutoff(0.0, d) == 1.0
    assert flow.lambda_cutoff(d * d, d) == 0.0
    lo, hi = (d / 2) ** 2, (3 * d / 4) ** 2
    assert flow.lambda_cutoff(0.5 * (lo + hi), d) == pytest.approx(0.5, abs=1e-15)
    s = np.linspace(0, 0.5, 1001)
    lam = flow.lambda_cutoff(s, d)
    assert np.all(np.diff(lam) <= 0) and lam.min() == 0 and lam.max() == 1
    assert flow.lambda_cutoff(0.04, d) == 1.0


def test_step_control_budget():
    g = line(64)
    b = flow.StepControl.budget(g, 3.0, 0.2)
    assert b == pytest.approx(g.h[0] ** 2 / (3.0 * 1.2 * 4))
    c = flow.StepControl.default(g, 3.0, 0.2)
    assert c.dt == pytest.approx(0.1 * b)
    with pytest.raises(ValueError):
        flow.StepControl(2 * c.dt).check(g, 3.0, 0.2)
    with pytest.raises(ValueError):
        flow.StepControl(1e-3, scheme="leapfrog")


def test_step_constant_and_equator_stationary():
    g = line(64)
    ctl = flow.StepControl.default(g, 1.0, 0.0)
    c = initial.constant(g, (0.3, -0.4, 0.5))
    st = flow.step(flow.FlowState(c), g, TWO_PLUS_SIN, ctl)
    assert np.abs(st.u - c).max() < 1e-15
    e = initial.equator(g)
    st = flow.step(flow.FlowState(e), g, ONE, ctl)
    assert np.abs(st.u - e).max() < g.h[0] ** 2 * ctl.dt
    assert st.t == ctl.dt and st.step == 1


def test_unit_norm_after_steps():
    g = TorusGrid((16, 16), (TWO_PI, TWO_PI))
    spec = cpl.CouplingSpec(2.0, (cpl.CouplingTerm(0.8, (1, 1), (0.2, 0.0), 2.0, 0.0),))
    _, eta = cpl.bounds(spec, g)
    ctl = flow.StepControl.default(g, eta, 0.2)
    tr = flow.evolve(initial.random_map(g, seed=2, modes=2), g, spec, 0.2, ctl, 20 * ctl.dt, diagnostics=False)
    assert all(unit_error(u) < 1e-14 for u in tr.states)


def test_step_rejected_on_blowup():
    g = line(32)
    ctl = flow.StepControl(5.0 * flow.StepControl.budget(g, 1.0, 0.0))
    u0 = initial.random_map(g, seed=1)
    with pytest.raises(StepRejected) as info:
        flow.evolve(u0, g, ONE, 0.0, ctl, 200 * ctl.dt, diagnostics=False)
    assert info.value.step_index >= 1
    assert info.value.trajectory.states[0] is not None


def test_zero_steps():
    g = line(16)
    tr = flow.evolve(initial.equator(g), g, ONE, 0.0, flow.StepControl(1e-3), 0.0)
    assert len(tr.states) == 1 and tr.nsteps == 0 and len(tr.records) == 1


def test_rhs_ambient_on_sphere():
    g = line(64)
    u = initial.random_map(g, seed=5)
    fs = unit_fs(g)
    amb = flow.rhs_ambient(u, g, fs, 0.0)
    tau = flow.tension(u, g)
    ref = np.cross(u, tau)
    assert np.abs(amb - ref).max() < 1e-12 * np.abs(ref).max()
    assert np.all(flow.rhs_ambient(initial.constant(g), g, fs, 0.3) == 0)


def test_rhs_ambient_matches_rhs_on_sphere_with_eps():
    # the normal parts cancel exactly for sphere-valued data
    g = line(64)
    u = initial.random_map(g, seed=5)
    fs = cpl.sample(TWO_PLUS_SIN, g, 0.0)
    amb = flow.rhs_ambient(u, g, fs, 0.4)
    ref = flow.rhs(u, g, fs, 0.4)
    assert np.abs(amb - ref).max() < 1e-11 * np.abs(ref).max()


def test_rhs_ambient_tube():
    g = line(32)
    u = initial.equator(g)
    fs = unit_fs(g)
    flow.rhs_ambient(1.2 * u, g, fs, 0.1)  # inside the plateau
    with pytest.raises(LeftTube):
        flow.rhs_ambient(1.6 * u, g, fs, 0.1)
    with pytest.raises(LeftTube):
        flow.AmbientState(1.6 * u)


def test_energy_dissipation_1000_steps():
    g = line(64)
    _, eta = cpl.bounds(TWO_PLUS_SIN, g)
    ctl = flow.StepControl.default(g, eta, 0.1)
    tr = flow.evolve(initial.rotated(g), g, TWO_PLUS_SIN, 0.1, ctl, 1000 * ctl.dt, kmax=1)
    E = np.array([r.energy for r in tr.records])
    assert tr.nsteps == 1000 and len(E) == 1001
    assert np.diff(E).max() <= 1e-10


def test_ambient_and_projected_agree():
    g = line(64)
    _, eta = cpl.bounds(TWO_PLUS_SIN, g)
    ctl = flow.StepControl.default(g, eta, 0.1)
    u0 = initial.rotated(g)
    a = flow.evolve(u0, g, TWO_PLUS_SIN, 0.1, ctl, 0.05, sample_interval=10**6, mode="ambient", diagnostics=False)
    p = flow.evolve(u0, g, TWO_PLUS_SIN, 0.1, ctl, 0.05, sample_interval=10**6, diagnostics=False)
    assert np.abs(a.final - p.final).max() < ctl.dt + g.h[0] ** 2


def test_scheme_consistency_first_order():
    g = line(32)
    _, eta = cpl.bounds(TWO_PLUS_SIN, g)
    base = flow.StepControl.default(g, eta, 0.0).dt
    diffs = []
    u0 = initial.rotated(g)
    for k in (1, 2, 4):
        r = flow.evolve(u0, g, TWO_PLUS_SIN, 0.0, flow.StepControl(base / k), 0.05, 10**6, diagnostics=False)
        e = flow.evolve(u0, g, TWO_PLUS_SIN, 0.0, flow.StepControl(base / k, scheme="euler"), 0.05, 10**6,
                        diagnostics=False)
        diffs.append(np.abs(r.final - e.final).max())
    assert 1.8 < diffs[0] / diffs[1] < 2.2 and 1.8 < diffs[1] / diffs[2] < 2.2


def test_evolve_deterministic():
    g = TorusGrid((16, 16), (TWO_PI, TWO_PI))
    u0 = initial.random_map(g, seed=9, modes=2)
    ctl = flow.StepControl.default(g, 3.0, 0.1)
    spec = cpl.CouplingSpec(2.0, (cpl.CouplingTerm(1.0, (1, 0)),))
    a = flow.evolve(u0, g, spec, 0.1, ctl, 10 * ctl.dt, diagnostics=False)
    b = flow.evolve(u0, g, spec, 0.1, ctl, 10 * ctl.dt, diagnostics=False)
    assert all(np.array_equal(x, y) for x, y in zip(a.states, b.states))
