import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsflab import coupling as cpl
from nsflab import diagnostics as dg
from nsflab import flow, geometry as geo, initial
from nsflab.errors import AntipodalPoints, ExponentRelationViolated, KTooLarge, ZeroInitialEnergy, ZeroSection
from nsflab.grid import TorusGrid, gradient

TWO_PI = 2 * math.pi
TWO_PLUS_SIN = cpl.CouplingSpec(2.0, (cpl.CouplingTerm(1.0, (1,), (-math.pi / 2,)),))


def line(n, L=TWO_PI):
    return TorusGrid((n,), (L,))


def const_fs(grid, c):
    return cpl.sample(cpl.CouplingSpec.constant(c), grid, 0.0)


def test_dirichlet_energy_examples():
    g = line(64)
    assert dg.dirichlet_energy(initial.constant(g), g, const_fs(g, 1.0)) == 0
    # exact discrete value: central differences see |u'|^2 = (sin h / h)^2
    h = g.h[0]
    for c in (1.0, 2.0):
        E = dg.dirichlet_energy(initial.equator(g), g, const_fs(g, c))
        assert E == pytest.approx(c * math.pi * (math.sin(h) / h) ** 2, rel=1e-13)


def test_dirichlet_energy_equator_tolerance():
    # pinned tolerance; the second-order discrete value is off by pi h^2 / 3 ~ 1e-2 at n = 64
    g = line(64)
    assert abs(dg.dirichlet_energy(initial.equator(g), g, const_fs(g, 1.0)) - math.pi) < 1e-3
    assert abs(dg.dirichlet_energy(initial.equator(g), g, const_fs(g, 2.0)) - TWO_PI) < 2e-3


def test_weighted_sobolev_examples():
    g = line(64)
    assert dg.weighted_sobolev(initial.constant(g), g, const_fs(g, 3.0), 2) == 0
    u = initial.random_map(g, seed=2)
    for k in (1, 2, 3):
        assert dg.weighted_sobolev(u, g, const_fs(g, 1.0), k) == dg.plain_sobolev(u, g, k)
    g = line(256)
    assert abs(dg.weighted_sobolev(initial.equator(g), g, const_fs(g, 2.0), 1) - 4 * math.pi) < 5e-3
    with pytest.raises(KTooLarge):
        dg.weighted_sobolev(u, g, const_fs(g, 1.0), 4)


def test_weighted_sobolev_constant_coupling_powers():
    g = TorusGrid((16, 16), (TWO_PI, TWO_PI))
    u = initial.random_map(g, seed=3, modes=2)
    c = 1.7
    from nsflab.grid import higher_covariant_norms, integrate

    terms = [integrate(d, g) for d in higher_covariant_norms(u, g, 3)]
    assert dg.weighted_sobolev(u, g, const_fs(g, c), 2) == pytest.approx(sum(c**l * t for l, t in zip((1, 2, 3), terms)),
                                                                           rel=1e-13)
    lhs, mid, rhs, ok = dg.sandwich_check(u, g, const_fs(g, c), 2)
    assert ok and lhs <= mid <= rhs


def test_sandwich_random_fields():
    g = line(64)
    fs = cpl.sample(TWO_PLUS_SIN, g, 0.0)
    for seed in range(100):
        u = initial.random_map(g, seed=seed, modes=4)
        for k in (1, 2, 3):
            assert dg.sandwich_check(u, g, fs, k)[3]
    assert dg.sandwich_check(initial.constant(g), g, fs, 1) == (0.0, 0.0, 0.0, True)


def test_tube_energy_examples():
    g = line(64)
    u = initial.equator(g)
    fs = const_fs(g, 1.0)
    assert dg.tube_energy(u, g, fs) < 1e-30
    assert abs(dg.tube_energy(1.1 * u, g, fs) - 0.5 * 0.01 * TWO_PI) < 1e-12


def _traj(grid, spec, eps, u0, T, sample=1):
    _, eta = cpl.bounds(spec, grid)
    ctl = flow.StepControl.default(grid, eta, eps)
    return flow.evolve(u0, grid, spec, eps, ctl, T, sample_interval=sample, diagnostics=False)


def test_residuals_vanish_on_constant_map():
    g = line(32)
    tr = _traj(g, cpl.CouplingSpec.constant(1.5), 0.0, initial.constant(g), 0.002)
    assert dg.energy_identity_residual(tr, 1) == 0
    assert dg.commuted_equation_residual(tr, 1) == 0


def test_commuted_residual_equator():
    g = line(64)
    tr = _traj(g, cpl.CouplingSpec.constant(1.0), 0.0, initial.equator(g), 0.001)
    assert dg.commuted_equation_residual(tr, 1) < 1e-2


def test_commuted_residual_uses_constant_value():
    # with f = c the right-hand side scales by c; the wrong constant would leave a large residual
    g = line(64)
    spec = cpl.CouplingSpec(1.0, (cpl.CouplingTerm(1.0, (0,), (0.5,)),))
    tr = _traj(g, spec, 0.0, initial.rotated(g), 0.002)
    base = _traj(g, cpl.CouplingSpec.constant(1.0 + math.cos(0.5)), 0.0, initial.rotated(g), 0.002)
    assert dg.commuted_equation_residual(tr, 2) == pytest.approx(dg.commuted_equation_residual(base, 2), rel=1e-6)


def test_commuted_residual_preconditions():
    g = line(32)
    tr = _traj(g, TWO_PLUS_SIN, 0.0, initial.rotated(g), 0.002)
    with pytest.raises(ValueError):
        dg.commuted_equation_residual(tr, 1)
    tr = _traj(g, cpl.CouplingSpec.constant(1.0), 0.1, initial.rotated(g), 0.002)
    with pytest.raises(ValueError):
        dg.commuted_equation_residual(tr, 1)


def test_energy_identity_with_dissipation():
    res = []
    for n in (32, 64):
        g = line(n)
        tr = _traj(g, TWO_PLUS_SIN, 0.2, initial.rotated(g), 0.02)
        res.append(dg.energy_identity_residual(tr, len(tr.states) // 2))
    assert res[1] < res[0]


def test_energy_identity_time_dependent():
    # with f_t != 0 the gain term must be accounted for
    spec = cpl.CouplingSpec(2.0, (cpl.CouplingTerm(0.5, (0,), (), 3.0, 0.0),))
    res = []
    for n in (32, 64):
        g = line(n)
        tr = _traj(g, spec, 0.0, initial.rotated(g), 0.3, sample=25)
        res.append(dg.energy_identity_residual(tr, len(tr.states) // 2))
    assert res[0] / res[1] > 3


def test_frame_components():
    f1, f2, sing = dg.frame(np.array([1.0, 0, 0]))
    np.testing.assert_array_equal(f1, [0, 0, 1])
    np.testing.assert_array_equal(f2, [0, -1, 0])
    assert not sing
    g = line(128)
    fr = dg.frame_components(initial.equator(g), g)
    assert np.abs(np.linalg.norm(fr.phi[0], axis=-1) - 1).max() < 1e-3
    g2 = TorusGrid((16, 16), (TWO_PI, TWO_PI))
    for seed in range(5):
        assert dg.frame_reconstruction_error(initial.random_map(g2, seed=seed), g2) < 1e-10
    pole = initial.constant(g)
    assert dg.frame_components(pole, g).singular.all()


def test_uniqueness_energy_examples():
    g = line(64)
    fs = const_fs(g, 1.0)
    u = initial.random_map(g, seed=1)
    p = dg.uniqueness_energy(u, u, g, fs)
    assert p.energy < 1e-14 and not p.distance_exceeds_delta0
    e = initial.equator(g)
    r = geo.rotate(e, (0, 0, 1), 0.01)
    psi = geo.parallel_transport(r[None], e[None], gradient(r, g)) - gradient(e, g)
    assert np.abs(psi).max() < 1e-10
    p = dg.uniqueness_energy(e, r, g, fs)
    assert p.energy == pytest.approx(TWO_PI * 1e-4, rel=1e-9)
    assert dg.uniqueness_energy(e, geo.rotate(e, (0, 0, 1), 0.3), g, fs).distance_exceeds_delta0
    with pytest.raises(AntipodalPoints):
        dg.uniqueness_energy(e, -e, g, fs)


def test_uniqueness_energy_rotation_invariant():
    g = TorusGrid((16, 16), (TWO_PI, TWO_PI))
    fs = cpl.sample(cpl.CouplingSpec(2.0, (cpl.CouplingTerm(1.0, (1, 1)),)), g, 0.0)
    u1 = initial.random_map(g, seed=1, modes=2, amplitude=0.5)
    u2 = geo.project_point(u1 + 0.05 * initial.random_map(g, seed=2, modes=2))
    a = dg.uniqueness_energy(u1, u2, g, fs).energy
    R = lambda v: geo.rotate(v, (0.2, 1.0, -0.4), 2.0)  # noqa: E731
    assert abs(dg.uniqueness_energy(R(u1), R(u2), g, fs).energy - a) < 1e-11


def test_gronwall_fit_examples():
    t = np.linspace(0, 1, 11)
    assert dg.gronwall_fit(t, np.full(11, 3.0)).rate == 0
    fit = dg.gronwall_fit(t, 0.5 * np.exp(2 * t))
    assert abs(fit.rate - 2) < 1e-12 and fit.certificate
    z = dg.gronwall_fit(t, np.zeros(11))
    assert z.all_zero
    with pytest.raises(ZeroInitialEnergy):
        dg.gronwall_fit(t, np.r_[0.0, np.ones(10)])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(1e-8, 1e3), min_size=2, max_size=30))
def test_gronwall_certificate_holds(values):
    t = np.linspace(0, 2, len(values))
    fit = dg.gronwall_fit(t, values)
    E0 = values[0]
    assert all(e <= E0 * math.exp(fit.rate * ti) for ti, e in zip(t, values))


def test_gn_probe_examples():
    g = line(64)
    rng = np.random.default_rng(0)
    s = initial.random_section(g, rng)
    assert dg.gn_probe(s, g, 0, 2, 3.0, 2, 3.0, 0.0) == pytest.approx(1.0, rel=1e-14)
    const = np.ones(g.shape + (3,))
    assert dg.gn_probe(const, g, 1, 2, 2, 2, 2, 0.5) == 0.0
    with pytest.raises(ExponentRelationViolated):
        dg.gn_probe(s, g, 1, 2, 2, 2, 2, 0.6)
    with pytest.raises(ZeroSection):
        dg.gn_probe(np.zeros(g.shape + (3,)), g, 1, 2, 2, 2, 2, 0.5)
    a = dg.gn_exponent(1, 2, math.inf, 2, 2, 1)
    assert a == pytest.approx(0.75)
    assert dg.gn_probe(s, g, 1, 2, math.inf, 2, 2, a) > 0


def test_gronwall_rate_stable_under_refinement():
    from nsflab import experiments as ex
    from nsflab.config import parse_config

    rates = []
    for n in (32, 64, 128):
        cfg = parse_config(f"[grid]\nn = {n}\n[coupling]\nc0 = 2.0\nterm = amplitude=1.0 k=1 phases=-1.57079632679\n"
                           f"[initial]\nfamily = rotated\n[solver]\nT = 0.2\nsample_interval = {n * n // 64}\n")
        rates.append(ex.uniqueness(cfg, 0.05, axis=(1.0, 0.0, 0.0)).fit.rate)
    assert (max(rates) - min(rates)) / max(rates) < 0.25
