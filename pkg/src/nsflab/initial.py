"""Named, seeded generators for initial maps and test sections."""

import math

import numpy as np

from .geometry import project_point


def _phase(grid, winding, period):
    x = grid.coords()[0]
    period = grid.L[0] if period is None else period
    return 2.0 * math.pi * winding * x / period


def constant(grid, direction=(0.0, 0.0, 1.0)):
    d = project_point(np.asarray(direction, dtype=float))
    return np.broadcast_to(d, grid.shape + (3,)).copy()


def equator(grid, winding=1, period=None):
    """u(x) = (cos k x, sin k x, 0) along the first axis; a geodesic, hence harmonic."""
    ph = _phase(grid, winding, period)
    return np.stack([np.cos(ph), np.sin(ph), np.zeros_like(ph)], axis=-1)


def rotated(grid, theta=0.5, axis=(1.0, 0.0, 0.0), winding=1, period=None):
    """Equator map twisted pointwise by the angle ``theta * cos(2 pi x / P)`` about ``axis``."""
    base = equator(grid, winding, period)
    P = grid.L[0] if period is None else period
    angle = theta * np.cos(2.0 * math.pi * grid.coords()[0] / P)
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    K = np.array([[0.0, -axis[2], axis[1]], [axis[2], 0.0, -axis[0]], [-axis[1], axis[0], 0.0]])
    kv = base @ K.T
    kkv = kv @ K.T
    out = base + np.sin(angle)[..., None] * kv + (1.0 - np.cos(angle))[..., None] * kkv
    return project_point(out)


def _trig_poly(grid, rng, modes_per_axis, components):
    X = grid.coords()
    out = np.zeros(grid.shape + (components,))
    ranges = [range(-modes_per_axis[j], modes_per_axis[j] + 1) for j in range(grid.m)]
    for k in np.array(np.meshgrid(*ranges, indexing="ij")).reshape(grid.m, -1).T:
        if not np.any(k):
            continue
        arg = sum(2.0 * math.pi * k[j] * X[j] / grid.L[j] for j in range(grid.m))
        a, b = rng.standard_normal(components), rng.standard_normal(components)
        out += np.cos(arg)[..., None] * a + np.sin(arg)[..., None] * b
    return out


def random_map(grid, seed=0, modes=3, amplitude=0.8):
    """Band-limited random map: normalise e_z + amplitude * g with max |g| = 1."""
    if not 0 <= amplitude < 1:
        raise ValueError("amplitude must lie in [0, 1) so the pre-image stays away from 0")
    rng = np.random.default_rng(seed)
    g = _trig_poly(grid, rng, (modes,) * grid.m, 3)
    g /= np.sqrt(np.einsum("...i,...i->...", g, g)).max()
    return project_point(np.array([0.0, 0.0, 1.0]) + amplitude * g)


def bump_profile(grid, center, radius):
    """Smooth compactly supported bump with peak value 1 at ``center``."""
    X = grid.coords()
    r2 = sum(((X[j] - center[j]) / radius) ** 2 for j in range(grid.m))
    out = np.zeros(grid.shape)
    inside = r2 < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
    return out


def bump(grid, amplitude=0.5, center=None, radius=None, winding=1, period=None):
    """Equator background plus a compactly supported lift towards e_z."""
    period = grid.L[0] if period is None else period
    if center is None:
        center = (0.5 * period,) * grid.m
    if radius is None:
        radius = 0.25 * period
    lift = amplitude * bump_profile(grid, center, radius)
    base = equator(grid, winding, period)
    return project_point(base + lift[..., None] * np.array([0.0, 0.0, 1.0]))


def random_section(grid, rng, kappa_max=6.0, components=3):
    """R^components-valued section with physical wave numbers |kappa| <= kappa_max."""
    X = grid.coords()
    out = np.zeros(grid.shape + (components,))
    limits = [int(kappa_max * Lj / (2.0 * math.pi)) for Lj in grid.L]
    ranges = [range(-lim, lim + 1) for lim in limits]
    for k in np.array(np.meshgrid(*ranges, indexing="ij")).reshape(grid.m, -1).T:
        kappa = [2.0 * math.pi * k[j] / grid.L[j] for j in range(grid.m)]
        if not np.any(k) or math.hypot(*kappa) > kappa_max:
            continue
        arg = sum(kappa[j] * X[j] for j in range(grid.m))
        a, b = rng.standard_normal(components), rng.standard_normal(components)
        out += np.cos(arg)[..., None] * a + np.sin(arg)[..., None] * b
    return out


FAMILIES = {
    "constant": constant,
    "equator": equator,
    "rotated": rotated,
    "random": random_map,
    "bump": bump,
}


def build(grid, family, **params):
    try:
        gen = FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown initial-data family {family!r}; expected one of {sorted(FAMILIES)}") from None
    return gen(grid, **params)


__all__ = ["FAMILIES", "build", "bump", "constant", "equator", "random_map", "random_section", "rotated"]
