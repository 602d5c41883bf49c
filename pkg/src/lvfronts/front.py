"""Periodic traveling fronts by long-time lab-frame evolution."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .errors import ConvergenceError, PreconditionError, ZeroSpeedError
from .kinetics import CoefficientSet, PeriodicOrbit, ReactionPack
from .pde import FRONT_BOUNDARY, Field, Grid1D, Stepper

log = logging.getLogger(__name__)


# --------------------------------------------------------------------------
# uniform-grid interpolation helpers

def _lagrange_weights(frac: float, offsets: np.ndarray) -> np.ndarray:
    w = np.ones(offsets.size)
    for k, ok in enumerate(offsets):
        for m, om in enumerate(offsets):
            if m != k:
                w[k] *= (frac - om) / (ok - om)
    return w


def shift_nodes(y: np.ndarray, s: float, order: int = 10) -> np.ndarray:
    """Translate samples by ``s`` grid spacings: ``out[j] = y(x_j - s h)``.

    Lagrange interpolation with ``order`` points; the stencil weights are the same
    for every node, so this is a short convolution. Ends are padded by edge values.
    """
    p = -float(s)
    base = int(np.floor(p))
    frac = p - base
    half = order // 2
    offsets = np.arange(-(half - 1), half + 1)
    w = _lagrange_weights(frac, offsets)
    pad = half + abs(base) + 1
    yp = np.pad(y, pad, mode="edge")
    n = y.size
    out = np.zeros(n)
    for wk, ok in zip(w, offsets):
        start = pad + base + ok
        out += wk * yp[start:start + n]
    return out


def interp_points(y: np.ndarray, x0: float, h: float, z, order: int = 4,
                  left: float | None = None, right: float | None = None) -> np.ndarray:
    """Lagrange interpolation of uniform samples ``y`` (first node ``x0``) at points ``z``.

    Points beyond the sampled range take the constant values ``left``/``right``
    (default: the end samples).
    """
    z = np.asarray(z, dtype=float)
    n = y.size
    pos = (z - x0) / h
    half = order // 2
    base = np.floor(pos).astype(np.int64)
    frac = pos - base
    offsets = np.arange(-(half - 1), half + 1)
    out = np.zeros(z.shape)
    for k, ok in enumerate(offsets):
        wk = np.ones(z.shape)
        for m, om in enumerate(offsets):
            if m != k:
                wk *= (frac - om) / (ok - om)
        idx = np.clip(base + ok, 0, n - 1)
        out += wk * y[idx]
    lo = y[0] if left is None else left
    hi = y[-1] if right is None else right
    out = np.where(pos < 0, lo, out)
    out = np.where(pos > n - 1, hi, out)
    return out


def d1_fd4(y: np.ndarray, h: float, axis: int = -1) -> np.ndarray:
    """4th-order first derivative; central inside, one-sided at the two end nodes on each side."""
    y = np.moveaxis(np.asarray(y, dtype=float), axis, -1)
    d = np.empty_like(y)
    d[..., 2:-2] = (y[..., :-4] - 8 * y[..., 1:-3] + 8 * y[..., 3:-1] - y[..., 4:]) / (12 * h)
    c = np.array([-25, 48, -36, 16, -3]) / (12 * h)
    d[..., 0] = y[..., :5] @ c
    d[..., 1] = (-3 * y[..., 0] - 10 * y[..., 1] + 18 * y[..., 2] - 6 * y[..., 3] + y[..., 4]) / (12 * h)
    d[..., -1] = -(y[..., ::-1][..., :5] @ c)
    d[..., -2] = (3 * y[..., -1] + 10 * y[..., -2] - 18 * y[..., -3] + 6 * y[..., -4] - y[..., -5]) / (12 * h)
    return np.moveaxis(d, -1, axis)


def d2_fd4(y: np.ndarray, h: float, axis: int = -1) -> np.ndarray:
    """4th-order central second derivative; 2nd-order at the outermost nodes."""
    y = np.moveaxis(np.asarray(y, dtype=float), axis, -1)
    d = np.empty_like(y)
    d[..., 2:-2] = (-y[..., :-4] + 16 * y[..., 1:-3] - 30 * y[..., 2:-2]
                    + 16 * y[..., 3:-1] - y[..., 4:]) / (12 * h * h)
    for i in (1, -2):
        d[..., i] = (y[..., i - 1] - 2 * y[..., i] + y[..., i + 1]) / (h * h)
    d[..., 0] = (2 * y[..., 0] - 5 * y[..., 1] + 4 * y[..., 2] - y[..., 3]) / (h * h)
    d[..., -1] = (2 * y[..., -1] - 5 * y[..., -2] + 4 * y[..., -3] - y[..., -4]) / (h * h)
    return np.moveaxis(d, -1, axis)


def level_set(y: np.ndarray, x: np.ndarray, level: float = 0.5) -> float:
    """Position where an increasing profile crosses ``level`` (linear between nodes)."""
    i = int(np.argmax(y >= level))
    if i == 0:
        return float(x[0])
    y0, y1 = y[i - 1], y[i]
    return float(x[i - 1] + (level - y0) / (y1 - y0) * (x[i] - x[i - 1]))


# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FrontOptions:
    warmup_periods: int = 60
    max_periods: int = 400
    tol_front: float = 1e-9
    tol_c: float = 1e-7
    record_stride: int = 1
    recenter: float = 10.0
    shift_order: int = 10
    init_width: float = 4.0
    initial: Optional["FrontProfile"] = None
    check_zero_speed: bool = True
    ls_window: int = 10


@dataclass(frozen=True)
class SpeedEstimate:
    c: float
    per_period_displacements: tuple
    converged: bool
    drift: float
    c_level_set: float = float("nan")
    drift_history: tuple = ()
    periods: int = 0


@dataclass(frozen=True)
class FrontProfile:
    zgrid: np.ndarray
    tgrid: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    Pz: np.ndarray
    Qz: np.ndarray
    c: float
    phase: float
    T: float
    d: float
    speed: Optional[SpeedEstimate] = None
    meta: dict = field(default_factory=dict)

    @property
    def h(self) -> float:
        return float(self.zgrid[1] - self.zgrid[0])

    @property
    def M(self) -> int:
        return self.tgrid.size

    @property
    def dt_rec(self) -> float:
        return self.T / self.M

    @property
    def L(self) -> float:
        return 0.5 * float(self.zgrid[-1] - self.zgrid[0])

    def window(self, margin: float = 10.0) -> np.ndarray:
        z0, z1 = self.zgrid[0], self.zgrid[-1]
        return (self.zgrid >= z0 + margin - 1e-12) & (self.zgrid <= z1 - margin + 1e-12)

    def derivatives(self):
        """``(Pzz, Qzz, Pt, Qt)`` by 4th-order z and 2nd-order periodic t differences."""
        h, dt = self.h, self.dt_rec
        Pzz, Qzz = d2_fd4(self.P, h), d2_fd4(self.Q, h)
        Pt = (np.roll(self.P, -1, 0) - np.roll(self.P, 1, 0)) / (2 * dt)
        Qt = (np.roll(self.Q, -1, 0) - np.roll(self.Q, 1, 0)) / (2 * dt)
        return Pzz, Qzz, Pt, Qt

    def time_weights(self, t):
        """Row indices and linear weights for (periodic) time ``t``."""
        s = np.mod(np.asarray(t, dtype=float), self.T) / self.dt_rec
        i0 = np.floor(s + 1e-9).astype(np.int64)
        w = np.clip(s - i0, 0.0, 1.0)
        w = np.where(w < 1e-9, 0.0, w)
        return i0 % self.M, (i0 + 1) % self.M, w

    def evaluate(self, t: float, z, which: str = "P", order: int = 4) -> np.ndarray:
        """Front component at time ``t`` (periodic) and arbitrary ``z``; limits 0/1 beyond the grid."""
        arr = {"P": self.P, "Q": self.Q, "Pz": self.Pz, "Qz": self.Qz}[which]
        lim = (0.0, 1.0) if which in ("P", "Q") else (0.0, 0.0)
        i0, i1, w = self.time_weights(t)
        x0 = self.zgrid[0]
        a = interp_points(arr[int(i0)], x0, self.h, z, order, *lim)
        if w == 0.0:
            return a
        b = interp_points(arr[int(i1)], x0, self.h, z, order, *lim)
        return (1 - w) * a + w * b

    def tail_magnitudes(self):
        return (float(max(self.P[:, 0].max(), self.Q[:, 0].max())),
                float(max((1 - self.P[:, -1]).max(), (1 - self.Q[:, -1]).max())))


def _initial_field(grid: Grid1D, opts: FrontOptions) -> Field:
    x = grid.x
    if opts.initial is not None:
        fp = opts.initial
        u = fp.evaluate(0.0, x, "P")
        v = fp.evaluate(0.0, x, "Q")
    else:
        u = 0.5 * (1 + np.tanh(x / opts.init_width))
        v = u.copy()
    u[0], v[0], u[-1], v[-1] = 0.0, 0.0, 1.0, 1.0
    return Field(u, v, 0.0)


def _recenter(fld: Field, m: int) -> None:
    """Move the profile by ``-m`` nodes (exact lattice translation, ends refilled)."""
    if m == 0:
        return
    for arr, lo, hi in ((fld.u, 0.0, 1.0), (fld.v, 0.0, 1.0)):
        if m > 0:
            arr[:-m] = arr[m:].copy()
            arr[-m:] = hi
        else:
            arr[-m:] = arr[:m].copy()
            arr[:-m] = lo


def optimal_shift(old: tuple, new: tuple, s0: float, order: int = 10, mask=None, iters: int = 6):
    """Shift ``s`` (nodes) minimizing ``||new - shift(old, s)||_2``; returns (s, max-norm drift)."""
    s = float(s0)
    eps = 1e-3
    for _ in range(iters):
        num = den = 0.0
        for a, b in zip(old, new):
            r = b - shift_nodes(a, s, order)
            J = (shift_nodes(a, s + eps, order) - shift_nodes(a, s - eps, order)) / (2 * eps)
            if mask is not None:
                r, J = r[mask], J[mask]
            num += float(r @ J)
            den += float(J @ J)
        if den == 0:
            break
        ds = num / den
        s += ds
        if abs(ds) < 1e-13:
            break
    drift = 0.0
    for a, b in zip(old, new):
        r = b - shift_nodes(a, s, order)
        if mask is not None:
            r = r[mask]
        drift = max(drift, float(np.max(np.abs(r))))
    return s, drift


def compute_front(coeffs: CoefficientSet, orbit: PeriodicOrbit, grid: Grid1D,
                  opts: FrontOptions = FrontOptions(), pack: ReactionPack | None = None,
                  backend=None) -> FrontProfile:
    pack = pack or ReactionPack(coeffs, orbit)
    T, dt, h = coeffs.T, grid.dt, grid.h
    nper = int(round(T / dt))
    if abs(nper * dt - T) > 1e-9 * T:
        raise PreconditionError(f"T/dt = {T / dt} must be an integer for front runs")
    if nper % opts.record_stride:
        raise PreconditionError("record_stride must divide the steps per period")
    st = Stepper(pack, grid, FRONT_BOUNDARY, backend=backend)
    x = grid.x
    fld = _initial_field(grid, opts)
    mask = grid.interior(10.0)
    offset = 0                  # lab position of local node 0 minus x[0], in nodes
    lab_pos, shifts, drifts = [], [], []
    prev = (fld.u.copy(), fld.v.copy())
    prev_pos = level_set(fld.u, x)
    converged = False
    k = 0
    for k in range(1, opts.max_periods + 1):
        st.advance(fld, nper)
        pos = level_set(fld.u, x)
        lab_pos.append(pos + offset * h)
        s, drift = optimal_shift(prev, (fld.u, fld.v), (pos - prev_pos) / h, opts.shift_order, mask)
        shifts.append(s)
        drifts.append(drift)
        cauchy = len(shifts) >= 2 and abs(shifts[-1] - shifts[-2]) * h <= opts.tol_c
        if k >= opts.warmup_periods and drift <= opts.tol_front and cauchy:
            converged = True
            break
        if abs(pos) > opts.recenter:
            m = int(round(pos / h))
            _recenter(fld, m)
            offset += m
            pos -= m * h
        prev = (fld.u.copy(), fld.v.copy())
        prev_pos = pos
        if k % 20 == 0:
            log.info("period %d: drift %.3e, c %.8f", k, drift, s * h / T)
    c = shifts[-1] * h / T
    disp = tuple(np.diff([0.0] + lab_pos)) if lab_pos else ()
    nls = min(opts.ls_window, len(lab_pos))
    c_ls = float(np.polyfit(np.arange(nls) * T, lab_pos[-nls:], 1)[0]) if nls >= 2 else float("nan")
    speed = SpeedEstimate(float(c), disp, converged, float(drifts[-1]), c_ls, tuple(drifts), k)
    if not converged:
        raise ConvergenceError(f"front did not converge in {opts.max_periods} periods "
                               f"(last drift {drifts[-1]:.3e})", drifts)
    if opts.check_zero_speed and abs(c) <= 1e-6 * (2 * grid.L / T):
        raise ZeroSpeedError(f"computed speed {c:.3e} is zero within tolerance", c)
    return _record_period(st, fld, grid, pack, c, opts, speed)


def _record_period(st: Stepper, fld: Field, grid: Grid1D, pack: ReactionPack, c: float,
                   opts: FrontOptions, speed: SpeedEstimate) -> FrontProfile:
    T, h = pack.T, grid.h
    nper = int(round(T / grid.dt))
    M = nper // opts.record_stride
    first = (fld.u.copy(), fld.v.copy())
    rec = st.advance(fld, nper, opts.record_stride)
    P = np.empty((M, grid.n_nodes))
    Q = np.empty((M, grid.n_nodes))
    dtr = T / M
    for m in range(M):
        u, v = first if m == 0 else (rec[m - 1, 0], rec[m - 1, 1])
        s = -c * m * dtr / h
        P[m] = shift_nodes(u, s, opts.shift_order)
        Q[m] = shift_nodes(v, s, opts.shift_order)
    np.clip(P, 0.0, 1.0, out=P)
    np.clip(Q, 0.0, 1.0, out=Q)
    x = grid.x
    # phase: cubic root of P(0, z) = 1/2
    i = int(np.argmax(P[0] >= 0.5))
    g = lambda z: float(interp_points(P[0], x[0], h, np.array([z]), 4)[0]) - 0.5  # noqa: E731
    z0 = brentq(g, x[i - 1], x[i], xtol=1e-15, rtol=1e-15)
    zgrid = x - z0
    Pz, Qz = d1_fd4(P, h), d1_fd4(Q, h)
    meta = {"L": grid.L, "h": h, "dt": grid.dt, "record_stride": opts.record_stride,
            "periods": speed.periods}
    return FrontProfile(zgrid, np.arange(M) * dtr, P, Q, Pz, Qz, float(c), float(z0),
                        T, pack.d, speed, meta)


def front_residual(front: FrontProfile, coeffs: CoefficientSet, orbit: PeriodicOrbit,
                   margin: float = 10.0, pack: ReactionPack | None = None) -> float:
    pack = pack or ReactionPack(coeffs, orbit)
    Pzz, Qzz, Pt, Qt = front.derivatives()
    t = front.tgrid
    P, Q = front.P, front.Q
    r1 = Pt - Pzz - front.c * front.Pz - pack.f(t, P, Q)
    r2 = Qt - front.d * Qzz - front.c * front.Qz - pack.l(t, P, Q)
    w = front.window(margin)
    return float(max(np.abs(r1[:, w]).max(), np.abs(r2[:, w]).max()))


def monotone_ok(front: FrontProfile, lo: float = 1e-6) -> bool:
    ok = True
    for W, Wz in ((front.P, front.Pz), (front.Q, front.Qz)):
        sel = (W >= lo) & (W <= 1 - lo)
        ok &= bool(np.all(Wz[sel] > 0))
    return ok


def limits_ok(front: FrontProfile, tol: float = 1e-5, margin: float = 5.0) -> bool:
    iz0 = int(np.argmin(np.abs(front.zgrid - (front.zgrid[0] + margin))))
    iz1 = int(np.argmin(np.abs(front.zgrid - (front.zgrid[-1] - margin))))
    return bool(max(front.P[:, iz0].max(), front.Q[:, iz0].max()) <= tol
                and max((1 - front.P[:, iz1]).max(), (1 - front.Q[:, iz1]).max()) <= tol)


def harnack_ratio(front: FrontProfile, floor: float = 1e-10, side: str = "both") -> float:
    """Largest ratio over z of max_t W / min_t W for the decaying quantities on each side."""
    zs = front.zgrid
    out = 1.0
    fields = []
    if side in ("both", "plus"):
        fields += [(1 - front.P)[:, zs >= 0], (1 - front.Q)[:, zs >= 0]]
    if side in ("both", "minus"):
        fields += [front.P[:, zs <= 0], front.Q[:, zs <= 0]]
    for W in fields:
        good = np.all(W > floor, axis=0)
        if np.any(good):
            out = max(out, float(np.max(W[:, good].max(0) / W[:, good].min(0))))
    return out


def condition_ratios(front: FrontProfile, floor: float = 1e-10):
    """``(min P/Q over z <= 0, min (1-Q)/(1-P) over z >= 0)``, nodes below ``floor`` excluded."""
    zs = front.zgrid
    P, Q = front.P[:, zs <= 0], front.Q[:, zs <= 0]
    good = (P > floor) & (Q > floor)
    eta0 = float(np.min(P[good] / Q[good])) if np.any(good) else float("nan")
    U, V = 1 - front.P[:, zs >= 0], 1 - front.Q[:, zs >= 0]
    good = (U > floor) & (V > floor)
    eta1 = float(np.min(V[good] / U[good])) if np.any(good) else float("nan")
    return eta0, eta1
