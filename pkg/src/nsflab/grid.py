"""Uniform periodic grids on flat tori and discrete calculus on them.

Field layout: a scalar field has shape ``grid.shape``, a vector field
``grid.shape + (3,)``, and a tensor field carrying ``l`` coordinate indices
is stored with one flattened leading axis of length ``m**l``, i.e.
``(m**l,) + grid.shape + (3,)``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import KTooLarge
from .geometry import project_tangent

MAX_COVARIANT_LEVEL = 4


@dataclass(frozen=True)
class TorusGrid:
    n: tuple
    L: tuple

    def __post_init__(self):
        n = tuple(int(v) for v in self.n)
        L = tuple(float(v) for v in self.L)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "L", L)
        if len(n) not in (1, 2) or len(L) != len(n):
            raise ValueError(f"grid dimension must be 1 or 2 with matching n and L, got n={n}, L={L}")
        for nj in n:
            if nj < 8 or nj % 2:
                raise ValueError(f"points per axis must be even and >= 8, got {nj}")
        for Lj in L:
            if not (Lj > 0 and math.isfinite(Lj)):
                raise ValueError(f"period lengths must be positive, got {Lj}")

    @classmethod
    def uniform(cls, m, n, L):
        return cls((n,) * m, (L,) * m)

    @property
    def m(self):
        return len(self.n)

    @property
    def shape(self):
        return self.n

    @property
    def h(self):
        return tuple(Lj / nj for Lj, nj in zip(self.L, self.n))

    @property
    def cell_volume(self):
        return math.prod(self.h)

    @property
    def area(self):
        return math.prod(self.L)

    @property
    def size(self):
        return math.prod(self.n)

    def coords(self):
        """Coordinate arrays, one per axis, each of shape ``grid.shape``."""
        axes = [np.arange(nj) * hj for nj, hj in zip(self.n, self.h)]
        return np.meshgrid(*axes, indexing="ij")

    def scaled(self, k):
        """Same spacing, every period multiplied by the integer ``k``."""
        return TorusGrid(tuple(k * nj for nj in self.n), tuple(k * Lj for Lj in self.L))


@dataclass(frozen=True, eq=False)
class SphereField:
    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=float)
        if values.shape != self.grid.shape + (3,):
            raise ValueError(f"expected values of shape {self.grid.shape + (3,)}, got {values.shape}")
        err = unit_error(values)
        if err > 1e-12:
            raise ValueError(f"field is not sphere-valued: max | |u| - 1 | = {err:.3e}")
        object.__setattr__(self, "values", values)


def unit_error(values):
    return float(np.max(np.abs(np.sqrt(np.einsum("...i,...i->...", values, values)) - 1.0)))


def _array_axis(field, grid, axis):
    if not 0 <= axis < grid.m:
        raise ValueError(f"axis {axis} out of range for a {grid.m}-dimensional grid")
    # scalar grid.shape, vector grid.shape + (3,), tensor (K,) + grid.shape + (3,)
    return axis + 1 if field.ndim == grid.m + 2 else axis


def diff_central(field, grid, axis):
    """Second-order periodic central difference along ``axis``."""
    field = np.asarray(field, dtype=float)
    ax = _array_axis(field, grid, axis)
    return (np.roll(field, -1, axis=ax) - np.roll(field, 1, axis=ax)) / (2.0 * grid.h[axis])


def diff_forward(field, grid, axis):
    field = np.asarray(field, dtype=float)
    ax = _array_axis(field, grid, axis)
    return (np.roll(field, -1, axis=ax) - field) / grid.h[axis]


def diff_backward(field, grid, axis):
    field = np.asarray(field, dtype=float)
    ax = _array_axis(field, grid, axis)
    return (field - np.roll(field, 1, axis=ax)) / grid.h[axis]


def laplacian(field, grid):
    """3-point (m=1) or 5-point (m=2) periodic Laplacian."""
    field = np.asarray(field, dtype=float)
    out = np.zeros_like(field)
    for j in range(grid.m):
        ax = _array_axis(field, grid, j)
        out += (np.roll(field, -1, axis=ax) - 2.0 * field + np.roll(field, 1, axis=ax)) / grid.h[j] ** 2
    return out


def covariant_derivative(u, s, grid, axis):
    """Discrete connection on the pull-back bundle: ``P(u) D_axis s``.

    ``u`` has shape ``grid.shape + (3,)``; ``s`` is either a vector field on
    the same grid or a tensor field with a leading index axis.
    """
    return project_tangent(u, diff_central(s, grid, axis))


def gradient(u, grid):
    """The discrete ``nabla u`` as an array of shape ``(m,) + grid.shape + (3,)``."""
    return np.stack([covariant_derivative(u, u, grid, j) for j in range(grid.m)])


def covariant_levels(u, grid, kmax):
    """Iterated covariant derivatives ``nabla^l u`` for ``l = 1..kmax``.

    Level ``l`` has shape ``(m**l,) + grid.shape + (3,)``.
    """
    if kmax > MAX_COVARIANT_LEVEL:
        raise KTooLarge(f"covariant derivatives are limited to order {MAX_COVARIANT_LEVEL}, got {kmax}")
    levels = []
    current = u[None, ...]
    for _ in range(kmax):
        current = np.concatenate([covariant_derivative(u, current, grid, j) for j in range(grid.m)])
        levels.append(current)
    return levels


def higher_covariant_norms(u, grid, kmax):
    """Pointwise ``|nabla^l u|^2`` for ``l = 1..kmax`` (list of scalar fields)."""
    return [np.einsum("k...i,k...i->...", lev, lev) for lev in covariant_levels(u, grid, kmax)]


def integrate(field, grid):
    """Periodic rectangle rule.

    Uses ``math.fsum``, so the result is the correctly rounded sum and does
    not depend on traversal order or partitioning.
    """
    values = np.asarray(field, dtype=float).ravel()
    return grid.cell_volume * math.fsum(values.tolist())
