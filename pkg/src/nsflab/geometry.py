"""Extrinsic geometry of the unit sphere S^2 in R^3.

Every function works pointwise on arrays of shape ``(..., 3)`` and
broadcasts over the leading axes, so a whole field can be passed at once.
"""

import numpy as np

from .errors import AntipodalPoints, NearZeroVector

TINY_NORM = 1e-14
# geodesic-convexity radius min{i0/2, 1/(4 sqrt(K0))} with i0 = pi, K0 = 1
DELTA0 = 0.25


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def norm(v):
    return np.sqrt(_dot(v, v))


def project_point(y):
    """Closest point on S^2, ``y / |y|``."""
    y = np.asarray(y, dtype=float)
    r = norm(y)
    if np.any(r < TINY_NORM):
        raise NearZeroVector(f"cannot project vector of norm {np.min(r)!r} onto the sphere")
    return y / r[..., None]


def rho(y):
    """Normal part ``y - pi(y)``."""
    y = np.asarray(y, dtype=float)
    return y - project_point(y)


def project_tangent(u, v):
    """Orthogonal projection of ``v`` onto the tangent plane at ``u``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return v - _dot(v, u)[..., None] * u


def complex_structure(u, v):
    """J(u)v = u x v, a rotation by pi/2 inside T_u S^2."""
    return np.cross(u, v)


def second_fundamental_form(u, X, Y):
    """A(u)(X, Y) = -<X, Y> u, the normal curvature of the unit sphere."""
    u = np.asarray(u, dtype=float)
    return -_dot(X, Y)[..., None] * u


def geodesic_distance(p, q):
    """Great-circle distance in [0, pi].

    Evaluated as ``atan2(|p x q|, <p, q>)``, which equals the clamped
    ``arccos(<p, q>)`` but keeps full relative accuracy for nearby points.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return np.arctan2(norm(np.cross(p, q)), _dot(p, q))


def parallel_transport(p, q, v):
    """Transport ``v`` in T_p S^2 to T_q S^2 along the minimal geodesic."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    c = 1.0 + _dot(p, q)
    if np.any(c < 1e-9):
        raise AntipodalPoints("parallel transport undefined between antipodal points")
    return v - (_dot(v, q) / c)[..., None] * (p + q)


def curvature(X, Y, Z):
    """Riemann tensor of the round sphere, R(X, Y)Z = <Y, Z>X - <X, Z>Y."""
    return _dot(Y, Z)[..., None] * X - _dot(X, Z)[..., None] * Y


def rotation_matrix(axis, angle):
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    x, y, z = axis
    K = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


def rotate(values, axis, angle):
    """Apply one global rotation of the target to every value."""
    R = rotation_matrix(axis, angle)
    return np.asarray(values, dtype=float) @ R.T
