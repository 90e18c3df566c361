"""Closed-form positive coupling functions f(x, t).

A spec is an offset plus separable trigonometric terms

    a * prod_j cos(2 pi k_j x_j / L_j + phi_j) * cos(omega t + psi),

so every spatial and temporal derivative is available analytically and
integer wave vectors make f exactly periodic on the torus.
"""

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonPositiveCoupling, TimeOutOfRange

DELTA_MIN = 1e-3
TIME_SAMPLES = 257


@dataclass(frozen=True)
class CouplingTerm:
    amplitude: float
    k: tuple
    phases: tuple = ()
    omega: float = 0.0
    psi: float = 0.0

    def __post_init__(self):
        k = tuple(int(v) for v in self.k)
        phases = tuple(float(v) for v in self.phases) or (0.0,) * len(k)
        if len(phases) != len(k):
            raise ValueError(f"term has {len(k)} wave numbers but {len(phases)} phases")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "phases", phases)
        object.__setattr__(self, "amplitude", float(self.amplitude))
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "psi", float(self.psi))

    @property
    def is_static(self):
        return self.omega == 0.0 or self.amplitude == 0.0


@dataclass(frozen=True)
class CouplingSpec:
    c0: float
    terms: tuple = ()
    horizon: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "c0", float(self.c0))
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "horizon", float(self.horizon))
        if not self.horizon > 0:
            raise ValueError(f"horizon T* must be positive, got {self.horizon}")

    @classmethod
    def constant(cls, value=1.0, horizon=1.0):
        return cls(value, (), horizon)

    @property
    def is_static(self):
        return all(t.is_static for t in self.terms)

    @property
    def is_spatially_constant(self):
        return all(all(kj == 0 for kj in t.k) for t in self.terms)

    def scaled(self, factor):
        """Same physical function on a torus whose periods are ``factor`` times larger."""
        terms = tuple(
            CouplingTerm(t.amplitude, tuple(factor * kj for kj in t.k), t.phases, t.omega, t.psi)
            for t in self.terms
        )
        return CouplingSpec(self.c0, terms, self.horizon)


@dataclass(frozen=True, eq=False)
class CouplingSamples:
    f: np.ndarray
    df: np.ndarray  # (m,) + grid.shape
    ft: np.ndarray
    delta: float
    eta: float
    t: float = 0.0
    static: bool = field(default=True)


def _check_dims(spec, grid):
    for t in spec.terms:
        if len(t.k) != grid.m:
            raise ValueError(f"coupling term has {len(t.k)} wave numbers on a {grid.m}-dimensional grid")


@functools.lru_cache(maxsize=64)
def _spatial_factors(spec, grid):
    """Per term: the spatial product and its derivative along each axis."""
    _check_dims(spec, grid)
    X = grid.coords()
    out = []
    for term in spec.terms:
        cos_parts, sin_parts = [], []
        for j in range(grid.m):
            w = 2.0 * math.pi * term.k[j] / grid.L[j]
            arg = w * X[j] + term.phases[j]
            cos_parts.append(np.cos(arg))
            sin_parts.append(-w * np.sin(arg))
        spatial = np.prod(cos_parts, axis=0)
        derivs = []
        for j in range(grid.m):
            parts = [sin_parts[i] if i == j else cos_parts[i] for i in range(grid.m)]
            derivs.append(np.prod(parts, axis=0))
        for arr in [spatial] + derivs:
            arr.setflags(write=False)
        out.append((spatial, np.stack(derivs)))
    return tuple(out)


def _evaluate(spec, grid, t):
    f = np.full(grid.shape, spec.c0)
    df = np.zeros((grid.m,) + grid.shape)
    ft = np.zeros(grid.shape)
    for term, (spatial, dspatial) in zip(spec.terms, _spatial_factors(spec, grid)):
        phase = term.omega * t + term.psi
        c = term.amplitude * math.cos(phase)
        s = -term.amplitude * term.omega * math.sin(phase)
        f += c * spatial
        df += c * dspatial
        if s != 0.0:
            ft += s * spatial
    return f, df, ft


@functools.lru_cache(maxsize=64)
def _sampled_extrema(spec, grid):
    lo, hi, t_lo = math.inf, -math.inf, 0.0
    times = np.linspace(0.0, spec.horizon, TIME_SAMPLES) if not spec.is_static else [0.0]
    for t in times:
        f, _, _ = _evaluate(spec, grid, float(t))
        if f.min() < lo:
            lo, t_lo = float(f.min()), float(t)
        hi = max(hi, float(f.max()))
    return lo, hi, t_lo


def bounds(spec, grid):
    """Sampled (delta, eta) over the grid and 257 times in [0, T*]."""
    lo, hi, t_lo = _sampled_extrema(spec, grid)
    if lo < DELTA_MIN:
        worst = offending_term(spec, grid, t_lo)
        where = "" if worst is None else f"; term #{worst + 1} contributes most negatively there"
        raise NonPositiveCoupling(
            f"coupling minimum {lo:.6g} at t = {t_lo:.6g} is below the positivity margin {DELTA_MIN}{where}"
        )
    return lo, hi


def offending_term(spec, grid, t):
    """Index of the term with the most negative value at the grid minimum of f(., t)."""
    if not spec.terms:
        return None
    f, _, _ = _evaluate(spec, grid, t)
    idx = np.unravel_index(np.argmin(f), f.shape)
    values = [
        term.amplitude * math.cos(term.omega * t + term.psi) * spatial[idx]
        for term, (spatial, _) in zip(spec.terms, _spatial_factors(spec, grid))
    ]
    return int(np.argmin(values))


def validate(spec, grid):
    bounds(spec, grid)
    return spec


def sample(spec, grid, t):
    """Analytic f, grad f and f_t on the grid at time ``t``."""
    t = float(t)
    if not (0.0 <= t <= spec.horizon * (1 + 1e-12)):
        raise TimeOutOfRange(f"t = {t!r} outside [0, {spec.horizon!r}]")
    delta, eta = bounds(spec, grid)
    f, df, ft = _evaluate(spec, grid, t)
    # keep delta <= f <= eta true for times between the certification samples
    delta = min(delta, float(f.min()))
    eta = max(eta, float(f.max()))
    return CouplingSamples(f, df, ft, delta, eta, t, spec.is_static)


def cbar1(spec, grid, t):
    """max_x |f_t / f| at time ``t``."""
    s = sample(spec, grid, t)
    if s.static:
        return 0.0
    return float(np.max(np.abs(s.ft / s.f)))
