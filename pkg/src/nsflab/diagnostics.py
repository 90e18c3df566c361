"""Energies, weighted norms, residuals and functionals evaluated on states.

Everything here is a pure function of recorded states; nothing feeds back
into the time stepping.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .errors import AntipodalPoints, ExponentRelationViolated, KTooLarge, ZeroInitialEnergy, ZeroSection
from .flow import coupling_at, tension_f
from .grid import covariant_derivative, covariant_levels, diff_central, gradient, integrate, unit_error

DEFAULT_KMAX = 3


def _sq(a):
    return np.einsum("...i,...i->...", a, a)


def _level_densities(u, grid, levels):
    return [np.einsum("k...i,k...i->...", lev, lev) for lev in covariant_levels(u, grid, levels)]


def dirichlet_energy(u, grid, fs):
    """E_f(u) = 1/2 * int f |nabla u|^2."""
    (dens,) = _level_densities(u, grid, 1)
    return 0.5 * integrate(fs.f * dens, grid)


def sobolev_norms(u, grid, fs, kmax):
    """Weighted and plain squared norms of ``nabla u`` for k = 1..kmax.

    ``weighted[k-1] = sum_{l=1}^{k+1} int f^l |nabla^l u|^2`` and ``plain``
    is the same sum with f = 1.
    """
    if kmax + 1 > 4:
        raise KTooLarge(f"k + 1 must be at most 4, got k = {kmax}")
    dens = _level_densities(u, grid, kmax + 1)
    w_terms = [integrate(fs.f**l * d, grid) for l, d in enumerate(dens, start=1)]
    p_terms = [integrate(d, grid) for d in dens]
    weighted = [math.fsum(w_terms[: k + 1]) for k in range(1, kmax + 1)]
    plain = [math.fsum(p_terms[: k + 1]) for k in range(1, kmax + 1)]
    return weighted, plain


def weighted_sobolev(u, grid, fs, k):
    return sobolev_norms(u, grid, fs, k)[0][k - 1]


def plain_sobolev(u, grid, k):
    dens = _level_densities(u, grid, k + 1)
    return math.fsum(integrate(d, grid) for d in dens)


def sandwich_bounds(plain, k, delta, eta):
    """(delta^{k+1} plain, eta^{k+1} plain) with delta <= 1 <= eta enforced."""
    lo, hi = min(delta, 1.0), max(eta, 1.0)
    return lo ** (k + 1) * plain, hi ** (k + 1) * plain


def sandwich_holds(weighted, plain, k, delta, eta, rtol=1e-12):
    lhs, rhs = sandwich_bounds(plain, k, delta, eta)
    slack = rtol * max(abs(lhs), abs(rhs), abs(weighted))
    return lhs - slack <= weighted <= rhs + slack


def sandwich_check(u, grid, fs, k, delta=None, eta=None):
    """Return ``(lhs, weighted, rhs, passed)`` for the weighted-norm sandwich."""
    delta = fs.delta if delta is None else delta
    eta = fs.eta if eta is None else eta
    weighted, plain = sobolev_norms(u, grid, fs, k)
    lhs, rhs = sandwich_bounds(plain[k - 1], k, delta, eta)
    return lhs, weighted[k - 1], rhs, sandwich_holds(weighted[k - 1], plain[k - 1], k, delta, eta)


def tube_energy(v, grid, fs):
    """1/2 * int |rho(v)|^2 / f."""
    r = geo.rho(v)
    return 0.5 * integrate(_sq(r) / fs.f, grid)


def tube_gradient_scale(v, grid):
    """max_x sum_j |D_j rho(v)|^2, the scale used for per-step slack."""
    r = geo.rho(v)
    return float(np.max(sum(_sq(diff_central(r, grid, j)) for j in range(grid.m))))


@dataclass
class DiagnosticsRecord:
    t: float
    energy: float
    weighted: tuple
    plain: tuple
    unit_err: float
    max_tau_f: float
    tube_energy: float = None
    sandwich_ok: bool = True
    residuals: dict = field(default_factory=dict)


def record_state(values, grid, spec, t, kmax=DEFAULT_KMAX, ambient=False):
    fs = coupling_at(spec, grid, t)
    u = geo.project_point(values) if ambient else values
    weighted, plain = sobolev_norms(u, grid, fs, kmax)
    energy = dirichlet_energy(u, grid, fs)
    tau = tension_f(u, grid, fs)
    ok = all(
        sandwich_holds(weighted[k - 1], plain[k - 1], k, fs.delta, fs.eta) for k in range(1, kmax + 1)
    )
    return DiagnosticsRecord(
        t=float(t),
        energy=energy,
        weighted=tuple(weighted),
        plain=tuple(plain),
        unit_err=unit_error(values),
        max_tau_f=float(np.sqrt(_sq(tau).max())),
        tube_energy=tube_energy(values, grid, fs) if ambient else None,
        sandwich_ok=ok,
    )


# -- time-derivative identities ------------------------------------------------


def _sphere_states(traj, idx):
    s = traj.states[idx]
    return geo.project_point(s) if traj.mode == "ambient" else s


def energy_rate_terms(u, grid, fs, eps):
    """(1/2 int f_t |nabla u|^2, eps int |tau_f|^2) at one state."""
    (dens,) = _level_densities(u, grid, 1)
    tau = tension_f(u, grid, fs)
    return 0.5 * integrate(fs.ft * dens, grid), eps * integrate(_sq(tau), grid)


def energy_identity_residual(traj, i):
    """|centered dE_f/dt - (1/2 int f_t |grad u|^2 - eps int |tau_f|^2)| at index i."""
    if not 0 < i < len(traj.states) - 1:
        raise IndexError("the energy identity needs recorded states on both sides of index i")
    grid, spec = traj.grid, traj.spec
    t0, t1, t2 = traj.times[i - 1], traj.times[i], traj.times[i + 1]
    e0 = dirichlet_energy(_sphere_states(traj, i - 1), grid, coupling_at(spec, grid, t0))
    e2 = dirichlet_energy(_sphere_states(traj, i + 1), grid, coupling_at(spec, grid, t2))
    gain, loss = energy_rate_terms(_sphere_states(traj, i), grid, coupling_at(spec, grid, t1), traj.eps)
    return abs((e2 - e0) / (t2 - t0) - (gain - loss))


def commuted_equation_residual(traj, i, axis=None):
    """Sup-norm residual of the differentiated flow equation at time index i.

    Checks ``nabla_t nabla_a u = c J(u)(nabla_k nabla_k nabla_a u +
    R(nabla_a u, nabla_k u) nabla_k u)`` on the flat torus, where the run
    must use eps = 0 and a constant coupling ``f = c``.
    """
    if traj.eps != 0:
        raise ValueError("the commuted equation holds for eps = 0 runs only")
    spec = traj.spec
    if not (spec.is_static and spec.is_spatially_constant):
        raise ValueError("the commuted equation is implemented for constant couplings")
    if not 0 < i < len(traj.states) - 1:
        raise IndexError("the commuted equation needs recorded states on both sides of index i")
    grid = traj.grid
    c = float(coupling_at(spec, grid, 0.0).f.flat[0])
    um, u, up = (_sphere_states(traj, k) for k in (i - 1, i, i + 1))
    dt = traj.times[i + 1] - traj.times[i - 1]
    gm, g, gp = gradient(um, grid), gradient(u, grid), gradient(up, grid)
    axes = range(grid.m) if axis is None else [axis]
    worst = 0.0
    for a in axes:
        lhs = geo.project_tangent(u, (gp[a] - gm[a]) / dt)
        bracket = np.zeros_like(u)
        for k in range(grid.m):
            inner = covariant_derivative(u, g[a], grid, k)
            bracket += covariant_derivative(u, inner, grid, k)
            bracket += geo.curvature(g[a], g[k], g[k])
        rhs = c * geo.complex_structure(u, bracket)
        worst = max(worst, float(np.sqrt(_sq(lhs - rhs).max())))
    return worst


# -- moving frame ----------------------------------------------------------------


@dataclass
class FrameComponents:
    f1: np.ndarray
    f2: np.ndarray
    phi: np.ndarray  # (m,) + grid.shape + (2,)
    singular: np.ndarray


def frame(u):
    """Pointwise orthonormal tangent frame (f1, f2 = J(u) f1, singular mask).

    f1 is the normalised projection of e_z, or of e_x where u is within
    1e-6 of the poles.
    """
    u = np.asarray(u, dtype=float)
    p = geo.project_tangent(u, np.broadcast_to(np.array([0.0, 0.0, 1.0]), u.shape))
    singular = geo.norm(p) < 1e-6
    if np.any(singular):
        alt = geo.project_tangent(u, np.broadcast_to(np.array([1.0, 0.0, 0.0]), u.shape))
        p = np.where(singular[..., None], alt, p)
    f1 = p / geo.norm(p)[..., None]
    return f1, geo.complex_structure(u, f1), singular


def frame_components(u, grid):
    """Orthonormal frame with f2 = J(u) f1 and the components of nabla u in it."""
    u = np.asarray(u, dtype=float)
    f1, f2, singular = frame(u)
    g = gradient(u, grid)
    phi = np.stack([np.einsum("j...i,...i->j...", g, f1), np.einsum("j...i,...i->j...", g, f2)], axis=-1)
    return FrameComponents(f1, f2, phi, singular)


def frame_reconstruction_error(u, grid):
    fr = frame_components(u, grid)
    g = gradient(u, grid)
    rebuilt = fr.phi[..., 0:1] * fr.f1 + fr.phi[..., 1:2] * fr.f2
    return float(np.sqrt(_sq(rebuilt - g).max()))


# -- uniqueness functional -------------------------------------------------------


@dataclass
class PairDiagnostics:
    t: float
    max_distance: float
    energy: float
    distance_exceeds_delta0: bool


def uniqueness_energy(u1, u2, grid, fs, t=0.0):
    """E = int d(u1, u2)^2 + 1/2 int f |P grad u2 - grad u1|^2."""
    d = geo.geodesic_distance(u1, u2)
    dmax = float(d.max())
    if dmax >= math.pi - 1e-6:
        raise AntipodalPoints(f"fields are nearly antipodal somewhere (max distance {dmax:.6g})")
    g1, g2 = gradient(u1, grid), gradient(u2, grid)
    psi = geo.parallel_transport(u2[None], u1[None], g2) - g1
    energy = integrate(d * d, grid) + 0.5 * integrate(fs.f * np.einsum("j...i,j...i->...", psi, psi), grid)
    return PairDiagnostics(float(t), dmax, energy, dmax >= geo.DELTA0)


@dataclass
class GronwallFit:
    rate: float
    all_zero: bool
    certificate: bool


def gronwall_fit(times, energies, scale=1.0):
    """Smallest rate C with E_i <= E_0 exp(C t_i) on the whole series."""
    t = np.asarray(times, dtype=float)
    E = np.asarray(energies, dtype=float)
    if np.all(np.abs(E) < 1e-13 * scale):
        return GronwallFit(0.0, True, True)
    E0 = E[0]
    if E0 < 1e-300:
        raise ZeroInitialEnergy("E_0 vanishes while later energies do not")
    candidates = [(math.log(Ei) - math.log(E0)) / ti for ti, Ei in zip(t[1:], E[1:]) if Ei > 0]
    rate = max(candidates) if candidates else 0.0

    def holds(C):
        return all(Ei <= E0 * math.exp(C * ti) for ti, Ei in zip(t, E))

    # absorb rounding in exp/log so the certificate holds exactly
    bump = max(abs(rate), 1.0) * 1e-16
    while not holds(rate):
        rate += bump
        bump *= 2.0
    return GronwallFit(float(rate), False, True)


# -- Gagliardo-Nirenberg probe ---------------------------------------------------


def _inv(p):
    return 0.0 if math.isinf(p) else 1.0 / p


def gn_exponent(j, k, p, q, r, m):
    """The interpolation exponent a solving the scaling relation, or None."""
    denom = _inv(q) - _inv(r) - k / m
    if denom == 0:
        return None
    return (_inv(p) - j / m - _inv(r)) / denom


def _derivative_levels(s, grid, kmax):
    base = s.reshape((1,) + grid.shape + (-1,))
    levels = [base]
    for _ in range(kmax):
        cur = levels[-1]
        levels.append(np.concatenate([diff_central(cur, grid, j) for j in range(grid.m)]))
    return levels


def _lp(density_sq, grid, p):
    mag = np.sqrt(density_sq)
    if math.isinf(p):
        return float(mag.max())
    return integrate(mag**p, grid) ** (1.0 / p)


def gn_probe(s, grid, j, k, p, q, r, a):
    """||nabla^j s||_p / (||s||_{H^{k,q}}^a ||s||_r^{1-a}) with discrete norms."""
    m = grid.m
    lhs_rel = _inv(p)
    rhs_rel = j / m + _inv(r) + a * (_inv(q) - _inv(r) - k / m)
    if abs(lhs_rel - rhs_rel) > 1e-12:
        raise ExponentRelationViolated(f"1/p = {lhs_rel!r} but the scaling relation gives {rhs_rel!r}")
    lower = j / k if k > 0 else 0.0
    if not lower - 1e-12 <= a <= 1.0 + 1e-12:
        raise ExponentRelationViolated(f"a = {a!r} outside [{lower!r}, 1]")
    if q != 1 and k != j and abs(q - m / (k - j)) < 1e-12 and a >= 1.0:
        raise ExponentRelationViolated("a must be < 1 when q = m/(k - j) != 1")
    s = np.asarray(s, dtype=float)
    if not np.any(s):
        raise ZeroSection("the section vanishes identically")
    levels = _derivative_levels(s, grid, max(j, k))
    dens = [np.einsum("k...i,k...i->...", lev, lev) for lev in levels]
    lhs = _lp(dens[j], grid, p)
    if math.isinf(q):
        hk = sum(_lp(d, grid, q) for d in dens[: k + 1])
    else:
        hk = math.fsum(_lp(d, grid, q) ** q for d in dens[: k + 1]) ** (1.0 / q)
    rhs = hk**a * _lp(dens[0], grid, r) ** (1.0 - a)
    return lhs / rhs


def gn_ensemble_max(grid, exponents, count=200, seed=0, kappa_max=6.0):
    """Largest probe ratio over ``count`` seeded band-limited sections."""
    from .initial import random_section

    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(count):
        s = random_section(grid, rng, kappa_max)
        best = max(best, gn_probe(s, grid, *exponents))
    return best
