# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False, language_level=3
"""Compiled IMEX time-stepping loop.

Each step solves ``(I - dt L) delta = dt (L w + R(t_half, w))`` for both
components and sets ``w += delta``, so spatially constant equilibria are exact
fixed points.  The tridiagonal matrices are constant and factored once per call.
"""
import numpy as np
from libc.math cimport fabs, isfinite

BACKEND = "cython"


cdef void _factor(double[::1] cp, double[::1] den, double r, int n, int neumann) noexcept nogil:
    # sub/super = -r, diag = 1 + 2r on interior rows
    cdef int i
    cdef double a, b, c
    if neumann:
        b = 1.0 + 2.0 * r
        c = -2.0 * r
    else:
        b = 1.0
        c = 0.0
    den[0] = b
    cp[0] = c / b
    for i in range(1, n):
        if i == n - 1:
            if neumann:
                a = -2.0 * r
                b = 1.0 + 2.0 * r
            else:
                a = 0.0
                b = 1.0
            c = 0.0
        else:
            a = -r
            b = 1.0 + 2.0 * r
            c = -r
        den[i] = b - a * cp[i - 1]
        cp[i] = c / den[i]


cdef void _solve(double[::1] cp, double[::1] den, double r, double[::1] rhs, int n,
                 int neumann) noexcept nogil:
    cdef int i
    cdef double a
    rhs[0] = rhs[0] / den[0]
    for i in range(1, n):
        if i == n - 1:
            a = -2.0 * r if neumann else 0.0
        else:
            a = -r
        rhs[i] = (rhs[i] - a * rhs[i - 1]) / den[i]
    for i in range(n - 2, -1, -1):
        rhs[i] -= cp[i] * rhs[i + 1]


def imex_run(double[::1] u, double[::1] v, const double[:, ::1] coef, double dt, double h,
             double d, int neumann, double uL, double vL, double uR, double vR,
             int record_stride, double[:, :, ::1] out, double bound=10.0):
    """Advance ``coef.shape[0]`` steps in place.

    ``coef[n] = (A, B, C, D)`` at the half-step time of step n.  Every
    ``record_stride`` steps the state is copied to ``out[k]``.  Returns the
    number of completed steps, or ``-(n + 1)`` if step n left ``[-bound, bound]``.
    """
    cdef int n = u.shape[0]
    cdef int nsteps = coef.shape[0]
    cdef double ih2 = 1.0 / (h * h)
    cdef double ru = dt * ih2
    cdef double rv = dt * d * ih2
    cdef double[::1] cpu = np.empty(n)
    cdef double[::1] denu = np.empty(n)
    cdef double[::1] cpv = np.empty(n)
    cdef double[::1] denv = np.empty(n)
    cdef double[::1] du = np.empty(n)
    cdef double[::1] dv = np.empty(n)
    cdef int i, s, k = 0
    cdef double A, B, C, D, ui, vi, lu, lv
    cdef bint bad = False
    _factor(cpu, denu, ru, n, neumann)
    _factor(cpv, denv, rv, n, neumann)
    with nogil:
        for s in range(nsteps):
            A = coef[s, 0]
            B = coef[s, 1]
            C = coef[s, 2]
            D = coef[s, 3]
            for i in range(n):
                ui = u[i]
                vi = v[i]
                if i == 0:
                    if neumann:
                        lu = 2.0 * (u[1] - ui) * ih2
                        lv = 2.0 * (v[1] - vi) * ih2
                    else:
                        du[0] = uL - ui
                        dv[0] = vL - vi
                        continue
                elif i == n - 1:
                    if neumann:
                        lu = 2.0 * (u[n - 2] - ui) * ih2
                        lv = 2.0 * (v[n - 2] - vi) * ih2
                    else:
                        du[i] = uR - ui
                        dv[i] = vR - vi
                        continue
                else:
                    lu = (u[i - 1] - 2.0 * ui + u[i + 1]) * ih2
                    lv = (v[i - 1] - 2.0 * vi + v[i + 1]) * ih2
                du[i] = dt * (lu + A * ui * (1.0 - ui) - B * ui * (1.0 - vi))
                dv[i] = dt * (d * lv + (1.0 - vi) * (D * ui - C * vi))
            _solve(cpu, denu, ru, du, n, neumann)
            _solve(cpv, denv, rv, dv, n, neumann)
            for i in range(n):
                u[i] += du[i]
                v[i] += dv[i]
                if not (fabs(u[i]) <= bound and fabs(v[i]) <= bound):
                    bad = True
            if bad:
                break
            if record_stride > 0 and (s + 1) % record_stride == 0:
                for i in range(n):
                    out[k, 0, i] = u[i]
                    out[k, 1, i] = v[i]
                k += 1
    if bad:
        return -(s + 1)
    return nsteps
