"""Pure numpy/LAPACK implementation of the IMEX loop (same contract as the compiled one)."""
import numpy as np
from scipy.linalg import lapack

BACKEND = "python"


def _factor(r, n, neumann):
    dl = np.full(n - 1, -r)
    dd = np.full(n, 1.0 + 2.0 * r)
    du = np.full(n - 1, -r)
    if neumann:
        du[0] = -2.0 * r
        dl[-1] = -2.0 * r
    else:
        dd[0] = dd[-1] = 1.0
        du[0] = 0.0
        dl[-1] = 0.0
    dl, dd, du, du2, ipiv, info = lapack.dgttrf(dl, dd, du)
    if info != 0:
        raise ArithmeticError("tridiagonal factorization failed")
    return dl, dd, du, du2, ipiv


def _solve(fac, rhs):
    x, info = lapack.dgttrs(*fac, rhs)
    return x


def imex_run(u, v, coef, dt, h, d, neumann, uL, vL, uR, vR, record_stride, out, bound=10.0):
    n = u.shape[0]
    ih2 = 1.0 / (h * h)
    fu = _factor(dt * ih2, n, neumann)
    fv = _factor(dt * d * ih2, n, neumann)
    lu = np.empty(n)
    lv = np.empty(n)
    k = 0
    for s in range(coef.shape[0]):
        A, B, C, D = coef[s]
        lu[1:-1] = (u[:-2] - 2.0 * u[1:-1] + u[2:]) * ih2
        lv[1:-1] = (v[:-2] - 2.0 * v[1:-1] + v[2:]) * ih2
        if neumann:
            lu[0] = 2.0 * (u[1] - u[0]) * ih2
            lu[-1] = 2.0 * (u[-2] - u[-1]) * ih2
            lv[0] = 2.0 * (v[1] - v[0]) * ih2
            lv[-1] = 2.0 * (v[-2] - v[-1]) * ih2
        du = dt * (lu + A * u * (1.0 - u) - B * u * (1.0 - v))
        dv = dt * (d * lv + (1.0 - v) * (D * u - C * v))
        if not neumann:
            du[0], du[-1] = uL - u[0], uR - u[-1]
            dv[0], dv[-1] = vL - v[0], vR - v[-1]
        u += _solve(fu, du)
        v += _solve(fv, dv)
        if not (np.all(np.abs(u) <= bound) and np.all(np.abs(v) <= bound)):
            return -(s + 1)
        if record_stride > 0 and (s + 1) % record_stride == 0:
            out[k, 0] = u
            out[k, 1] = v
            k += 1
    return coef.shape[0]
