"""Vectorised numpy kernels; used when the compiled extension is unavailable.

Arrays follow the kernel layout: ``u`` is ``(n0, n1, 3)`` (``n1 == 1`` on a
1-torus), ``f`` is ``(n0, n1)`` and ``df`` is ``(m, n0, n1)``.
"""

import numpy as np


def _dot(a, b):
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2]


def tension_f(u, f, df, h0, h1, m, out):
    hs = (h0, h1)
    lap = np.zeros_like(u)
    for j in range(m):
        up = np.roll(u, -1, axis=j)
        um = np.roll(u, 1, axis=j)
        lap += (up - 2.0 * u + um) * (1.0 / (hs[j] * hs[j]))
    tau = lap - _dot(lap, u)[..., None] * u
    res = f[..., None] * tau
    for j in range(m):
        g = (np.roll(u, -1, axis=j) - np.roll(u, 1, axis=j)) * (0.5 / hs[j])
        g = g - _dot(g, u)[..., None] * u
        res = res + df[j][..., None] * g
    out[...] = res
    return out


def rhs(u, f, df, h0, h1, m, eps, out, tau_out):
    tension_f(u, f, df, h0, h1, m, tau_out)
    out[...] = eps * tau_out + np.cross(u, tau_out)
    return out
