import math

import numpy as np
import pytest

from nsflab import coupling as cpl
from nsflab.errors import NonPositiveCoupling, TimeOutOfRange
from nsflab.grid import TorusGrid

TWO_PI = 2 * math.pi
G1 = TorusGrid((64,), (TWO_PI,))
# 2 + sin x written as 2 + cos(x - pi/2)
TWO_PLUS_SIN = cpl.CouplingSpec(2.0, (cpl.CouplingTerm(1.0, (1,), (-math.pi / 2,)),))


def test_unit_coupling():
    s = cpl.sample(cpl.CouplingSpec.constant(1.0), G1, 0.3)
    assert np.all(s.f == 1) and np.all(s.df == 0) and np.all(s.ft == 0)
    assert cpl.bounds(cpl.CouplingSpec.constant(1.0), G1) == (1.0, 1.0)


def test_two_plus_sin():
    s = cpl.sample(TWO_PLUS_SIN, G1, 0.5)
    (x,) = G1.coords()
    np.testing.assert_allclose(s.f, 2 + np.sin(x), atol=1e-15)
    np.testing.assert_allclose(s.df[0], np.cos(x), atol=1e-15)
    assert np.all(s.ft == 0)
    lo, hi = cpl.bounds(TWO_PLUS_SIN, G1)
    assert lo == pytest.approx(1.0, abs=1e-12) and hi == pytest.approx(3.0, abs=1e-12)


def test_time_derivative_symbolic():
    a, w = 0.7, 3.0
    spec = cpl.CouplingSpec(2.0, (cpl.CouplingTerm(a, (2,), (0.1,), w, math.pi / 2),))
    s = cpl.sample(spec, G1, 0.0)
    (x,) = G1.coords()
    spatial = np.cos(2 * x + 0.1)
    np.testing.assert_allclose(s.ft, -a * w * spatial, atol=1e-14)


def test_rejects_sign_changing():
    spec = cpl.CouplingSpec(0.5, (cpl.CouplingTerm(0.6, (1,)),))
    with pytest.raises(NonPositiveCoupling, match="term #1"):
        cpl.bounds(spec, G1)


def test_error_names_offending_term():
    spec = cpl.CouplingSpec(1.0, (cpl.CouplingTerm(0.3, (1,)), cpl.CouplingTerm(-0.9, (0,), (), 1.0, 0.0)), 2.0)
    with pytest.raises(NonPositiveCoupling, match="term #2"):
        cpl.bounds(spec, G1)


def test_time_out_of_range():
    with pytest.raises(TimeOutOfRange):
        cpl.sample(TWO_PLUS_SIN, G1, 1.5)
    with pytest.raises(TimeOutOfRange):
        cpl.sample(TWO_PLUS_SIN, G1, -0.1)


def test_cbar1():
    spec = cpl.CouplingSpec(2.0, (cpl.CouplingTerm(1.0, (0,), (), 1.0, 0.0),), 3.0)
    for t in (0.0, 0.7, 2.5):
        assert cpl.cbar1(spec, G1, t) == pytest.approx(abs(math.sin(t)) / (2 + math.cos(t)), abs=1e-14)
    assert cpl.cbar1(TWO_PLUS_SIN, G1, 0.2) == 0.0
    assert cpl.cbar1(cpl.CouplingSpec.constant(1.0), G1, 0.0) == 0.0


def test_bounds_hold_at_all_samples():
    g = TorusGrid((16, 24), (TWO_PI, 3.0))
    spec = cpl.CouplingSpec(
        3.0, (cpl.CouplingTerm(1.0, (1, 2), (0.3, 0.0), 2.0, 0.1), cpl.CouplingTerm(0.5, (0, 1), (), 5.0, 1.0)), 2.0
    )
    for t in np.linspace(0, 2.0, 41):
        s = cpl.sample(spec, g, t)
        assert s.delta <= s.f.min() and s.f.max() <= s.eta


def test_derivatives_match_finite_differences():
    spec = cpl.CouplingSpec(3.0, (cpl.CouplingTerm(1.0, (1, 2), (0.3, 0.0), 2.0, 0.1),), 2.0)
    errs = []
    for n in (16, 32):
        g = TorusGrid((n, n), (TWO_PI, 3.0))
        s = cpl.sample(spec, g, 0.5)
        fd = [(np.roll(s.f, -1, j) - np.roll(s.f, 1, j)) / (2 * g.h[j]) for j in range(2)]
        errs.append(max(np.abs(fd[j] - s.df[j]).max() for j in range(2)))
    assert 3.5 < errs[0] / errs[1] < 4.5
    g = TorusGrid((16, 16), (TWO_PI, 3.0))
    dt = 1e-4
    ft = (cpl.sample(spec, g, 0.5 + dt).f - cpl.sample(spec, g, 0.5 - dt).f) / (2 * dt)
    assert np.abs(ft - cpl.sample(spec, g, 0.5).ft).max() < 1e-6


def test_periodicity_and_scaling():
    g = TorusGrid((32,), (3.0,))
    spec = cpl.CouplingSpec(2.0, (cpl.CouplingTerm(0.8, (3,), (0.4,)),))
    big = cpl.sample(spec.scaled(2), g.scaled(2), 0.0).f
    np.testing.assert_allclose(big[:32], big[32:], atol=1e-14)
    np.testing.assert_allclose(big[:32], cpl.sample(spec, g, 0.0).f, atol=1e-14)
