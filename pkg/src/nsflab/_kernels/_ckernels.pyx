# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Fused per-point stencil kernels for the tension field and flow right-hand side.

Each output point reads only its stencil neighbours from the immutable input,
so the loop order does not affect the result.
"""


cdef inline void _tension_point(const double[:, :, ::1] u, const double[:, ::1] f,
                                const double[:, :, ::1] df, Py_ssize_t i, Py_ssize_t j,
                                Py_ssize_t n0, Py_ssize_t n1, double h0, double h1, int m,
                                double* res) noexcept nogil:
    cdef Py_ssize_t ip = i + 1 if i + 1 < n0 else 0
    cdef Py_ssize_t im = i - 1 if i > 0 else n0 - 1
    cdef Py_ssize_t jp, jm
    cdef double lap[3]
    cdef double g0[3]
    cdef double g1[3]
    cdef double inv0 = 1.0 / (h0 * h0)
    cdef double inv1
    cdef double ui[3]
    cdef double d, dg0, dg1, fv
    cdef int c
    for c in range(3):
        ui[c] = u[i, j, c]
        lap[c] = (u[ip, j, c] - 2.0 * ui[c] + u[im, j, c]) * inv0
        g0[c] = (u[ip, j, c] - u[im, j, c]) * (0.5 / h0)
        g1[c] = 0.0
    if m == 2:
        jp = j + 1 if j + 1 < n1 else 0
        jm = j - 1 if j > 0 else n1 - 1
        inv1 = 1.0 / (h1 * h1)
        for c in range(3):
            lap[c] = lap[c] + (u[i, jp, c] - 2.0 * ui[c] + u[i, jm, c]) * inv1
            g1[c] = (u[i, jp, c] - u[i, jm, c]) * (0.5 / h1)
    d = lap[0] * ui[0] + lap[1] * ui[1] + lap[2] * ui[2]
    dg0 = g0[0] * ui[0] + g0[1] * ui[1] + g0[2] * ui[2]
    dg1 = g1[0] * ui[0] + g1[1] * ui[1] + g1[2] * ui[2]
    fv = f[i, j]
    for c in range(3):
        res[c] = fv * (lap[c] - d * ui[c]) + df[0, i, j] * (g0[c] - dg0 * ui[c])
        if m == 2:
            res[c] = res[c] + df[1, i, j] * (g1[c] - dg1 * ui[c])


def tension_f(const double[:, :, ::1] u, const double[:, ::1] f, const double[:, :, ::1] df,
              double h0, double h1, int m, double[:, :, ::1] out):
    cdef Py_ssize_t n0 = u.shape[0]
    cdef Py_ssize_t n1 = u.shape[1]
    cdef Py_ssize_t i, j
    cdef double res[3]
    with nogil:
        for i in range(n0):
            for j in range(n1):
                _tension_point(u, f, df, i, j, n0, n1, h0, h1, m, res)
                out[i, j, 0] = res[0]
                out[i, j, 1] = res[1]
                out[i, j, 2] = res[2]
    return out


def rhs(const double[:, :, ::1] u, const double[:, ::1] f, const double[:, :, ::1] df,
        double h0, double h1, int m, double eps, double[:, :, ::1] out, double[:, :, ::1] tau_out):
    cdef Py_ssize_t n0 = u.shape[0]
    cdef Py_ssize_t n1 = u.shape[1]
    cdef Py_ssize_t i, j
    cdef double t[3]
    cdef double a0, a1, a2
    with nogil:
        for i in range(n0):
            for j in range(n1):
                _tension_point(u, f, df, i, j, n0, n1, h0, h1, m, t)
                tau_out[i, j, 0] = t[0]
                tau_out[i, j, 1] = t[1]
                tau_out[i, j, 2] = t[2]
                a0 = u[i, j, 0]
                a1 = u[i, j, 1]
                a2 = u[i, j, 2]
                out[i, j, 0] = eps * t[0] + (a1 * t[2] - a2 * t[1])
                out[i, j, 1] = eps * t[1] + (a2 * t[0] - a0 * t[2])
                out[i, j, 2] = eps * t[2] + (a0 * t[1] - a1 * t[0])
    return out
