"""Shift curves, sub/supersolution envelopes and entire solutions built from two fronts."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import InvalidInputError, NumericalError, PreconditionError
from .front import FrontProfile, interp_points
from .kinetics import CoefficientSet, PeriodicOrbit, ReactionPack
from .pde import NEUMANN, Field, Grid1D, Stepper

log = logging.getLogger(__name__)

C_ENV = 0.01  # tol_env = C_ENV (h^2 + dt), calibrated on PS-A


class OrientationError(PreconditionError):
    pass


class DomainError(PreconditionError):
    pass


# --------------------------------------------------------------------------
# shift curves

def shift_domain(K: float, c: float, nu3: float) -> float:
    """Largest admissible shift, the value of the shift map at rho = 0."""
    if c >= 0:
        raise OrientationError("shift curves need c < 0; reflect the problem first")
    if not (K > 0 and nu3 > 0):
        raise PreconditionError("K and nu3 must be positive")
    return -math.log1p(K / abs(c)) / nu3


def omega_of_rho(rho, K: float, c: float, nu3: float):
    """The strictly increasing map rho -> omega on rho <= 0."""
    rho = np.asarray(rho, dtype=float)
    return rho - np.log1p(K / abs(c) * np.exp(nu3 * rho)) / nu3


def rho_of_omega(omega: float, K: float, c: float, nu3: float, check: bool = True) -> float:
    """Inverse of :func:`omega_of_rho`; closed form, cross-checked by bracketed root finding."""
    varpi = shift_domain(K, c, nu3)
    if omega > varpi + 1e-14:
        raise DomainError(f"omega = {omega} exceeds the admissible bound {varpi}")
    s = K / abs(c)
    e = math.exp(nu3 * min(omega, varpi))
    rho = math.log(e / (1 - s * e)) / nu3
    rho = min(rho, 0.0)
    if check:
        g = lambda r: float(omega_of_rho(r, K, c, nu3)) - omega  # noqa: E731
        lo = min(rho, omega) - 1.0
        if g(0.0) > 0 and g(lo) < 0:
            r2 = brentq(g, lo, 0.0, xtol=1e-14, rtol=1e-15)
            if abs(r2 - rho) > 1e-10 * max(1.0, abs(rho)):
                raise NumericalError(f"shift inverse disagrees with root finding: {rho} vs {r2}")
    return rho


@dataclass(frozen=True)
class ShiftCurves:
    omega1: float
    omega2: float
    K: float
    c: float
    nu3: float
    rho1: float
    rho2: float
    varpi: float

    @property
    def driver(self) -> int:
        """1 if the first curve drives the common ODE, else 2."""
        return 1 if self.omega2 <= self.omega1 else 2

    @property
    def sigma(self) -> float:
        rho = self.rho1 if self.driver == 1 else self.rho2
        return self.K / abs(self.c) * math.exp(self.nu3 * rho)

    @property
    def R0(self) -> float:
        return self.sigma / self.nu3

    def offset(self, t):
        """Common value of j_i(t) - (-c t + omega_i)."""
        t = np.asarray(t, dtype=float)
        sg = self.sigma
        return -np.log1p(-sg / (1 + sg) * np.exp(-self.c * self.nu3 * t)) / self.nu3

    def j(self, t):
        """``(j1(t), j2(t))`` for t <= 0."""
        t = np.asarray(t, dtype=float)
        off = self.offset(t)
        return -self.c * t + self.omega1 + off, -self.c * t + self.omega2 + off

    def jdot(self, t):
        """Closed-form derivative shared by both curves."""
        t = np.asarray(t, dtype=float)
        sg, a = self.sigma, -self.c * self.nu3
        e = np.exp(a * t)
        return -self.c + (sg * a * e / (1 + sg * (1 - e))) / self.nu3

    def rhs(self, t):
        j1, j2 = self.j(t)
        return -self.c + self.K * np.exp(self.nu3 * np.maximum(j1, j2))

    def ode_residual(self, t) -> float:
        return float(np.max(np.abs(self.jdot(t) - self.rhs(t))))


def build_shift_curves(omega1: float, omega2: float, K: float, c: float, nu3: float) -> ShiftCurves:
    """Closed-form shift curves; the larger omega drives the common ODE."""
    varpi = shift_domain(K, c, nu3)
    for w in (omega1, omega2):
        if w > varpi + 1e-14:
            raise DomainError(f"omega = {w} exceeds the admissible bound {varpi}")
    s = K / abs(c)
    if omega2 <= omega1:
        r1 = rho_of_omega(omega1, K, c, nu3)
        r2 = omega2 + math.log1p(s * math.exp(nu3 * r1)) / nu3
    else:
        r2 = rho_of_omega(omega2, K, c, nu3)
        r1 = omega1 + math.log1p(s * math.exp(nu3 * r2)) / nu3
    return ShiftCurves(float(omega1), float(omega2), float(K), float(c), float(nu3), r1, r2, varpi)


# --------------------------------------------------------------------------
# envelopes

class FrontSampler:
    """Front values and derivatives at arbitrary (t, z), limits 0/1 outside the grid."""

    def __init__(self, front: FrontProfile, order: int = 4):
        self.front = front
        self.order = order
        Pzz, Qzz, Pt, Qt = front.derivatives()
        self.arrays = {"P": front.P, "Q": front.Q, "Pz": front.Pz, "Qz": front.Qz,
                       "Pzz": Pzz, "Qzz": Qzz, "Pt": Pt, "Qt": Qt}

    def __call__(self, t: float, z, name: str = "P") -> np.ndarray:
        f = self.front
        arr = self.arrays[name]
        lim = (0.0, 1.0) if name in ("P", "Q") else (0.0, 0.0)
        i0, i1, w = f.time_weights(t)
        a = interp_points(arr[int(i0)], f.zgrid[0], f.h, z, self.order, *lim)
        if w == 0.0:
            return a
        b = interp_points(arr[int(i1)], f.zgrid[0], f.h, z, self.order, *lim)
        return (1 - w) * a + w * b


@dataclass
class EnvelopePair:
    front: FrontProfile
    curves: Optional[ShiftCurves]
    omega1: float
    omega2: float
    sampler: FrontSampler = field(init=False, repr=False)

    def __post_init__(self):
        self.sampler = FrontSampler(self.front)

    @classmethod
    def from_curves(cls, front: FrontProfile, curves: ShiftCurves) -> "EnvelopePair":
        return cls(front, curves, curves.omega1, curves.omega2)

    def _super_args(self, t, x):
        if self.curves is None:
            raise PreconditionError("supersolution needs shift curves")
        if t > 1e-12:
            raise PreconditionError("supersolution is defined for t <= 0")
        j1, j2 = self.curves.j(t)
        return x + j1, -x + j2

    def super(self, t: float, x) -> tuple:
        x = np.asarray(x, dtype=float)
        z1, z2 = self._super_args(t, x)
        out = []
        for nm in ("P", "Q"):
            a, b = self.sampler(t, z1, nm), self.sampler(t, z2, nm)
            out.append(a + b - a * b)
        return tuple(out)

    def _sub_args(self, t, x):
        s1 = -self.front.c * t + self.omega1
        s2 = -self.front.c * t + self.omega2
        return x + s1, -x + s2

    def sub_branches(self, t: float, x, name: str = "P"):
        z1, z2 = self._sub_args(t, np.asarray(x, dtype=float))
        return self.sampler(t, z1, name), self.sampler(t, z2, name)

    def sub(self, t: float, x) -> tuple:
        return tuple(np.maximum(*self.sub_branches(t, x, nm)) for nm in ("P", "Q"))


def supersolution_eval(front: FrontProfile, curves: ShiftCurves, t: float, x) -> tuple:
    return EnvelopePair.from_curves(front, curves).super(t, x)


def subsolution_eval(front: FrontProfile, omegas: tuple, t: float, x) -> tuple:
    return EnvelopePair(front, None, *omegas).sub(t, x)


@dataclass(frozen=True)
class EnvelopeReport:
    min_super: tuple
    max_sub: tuple
    worst_super: tuple
    worst_sub: tuple
    excluded: int
    violation: float
    tol_env: float
    h: float
    dt: float
    passed: bool


def tol_env_for(h: float, dt: float, C: float = C_ENV) -> float:
    return C * (h * h + dt)


def verify_envelope_inequalities(env: EnvelopePair, pack: ReactionPack, t_check: float,
                                 t_stride: int = 10, margin: float = 10.0,
                                 tol_env: Optional[float] = None, kink_band: float = 2.0) -> EnvelopeReport:
    """Differential inequalities of both envelopes on recorded rows over t in [-t_check, 0].

    The supersolution parts use the chain rule on the front's finite-difference
    derivatives; the subsolution is checked on each smooth branch of the max with nodes
    within ``kink_band`` grid steps of a crossing excluded.
    """
    front, S = env.front, env.sampler
    h, dt = front.meta.get("h", front.h), front.meta.get("dt", front.dt_rec)
    tol = tol_env_for(h, dt) if tol_env is None else tol_env
    d, c = pack.d, front.c
    zlo, zhi = front.zgrid[0] + margin, front.zgrid[-1] - margin
    nsteps = int(round(t_check / front.dt_rec))
    m_sup = [np.inf, np.inf]
    m_sub = [-np.inf, -np.inf]
    w_sup = [None, None]
    w_sub = [None, None]
    excluded = 0
    for k in range(0, nsteps + 1, t_stride):
        t = -k * front.dt_rec
        # x range keeping every front argument inside the trusted window
        j1, j2 = env.curves.j(t)
        s1, s2 = -c * t + env.omega1, -c * t + env.omega2
        xlo = max(zlo - j1, j2 - zhi, zlo - s1, s2 - zhi)
        xhi = min(zhi - j1, j2 - zlo, zhi - s1, s2 - zlo)
        if xhi <= xlo:
            continue
        x = np.arange(math.ceil(xlo / front.h), math.floor(xhi / front.h) + 1) * front.h
        jd = float(env.curves.jdot(t))
        z1, z2 = x + j1, -x + j2
        val = {}
        for nm in ("P", "Q"):
            for suf in ("", "z", "zz", "t"):
                key = nm + suf
                val[key + "1"] = S(t, z1, key)
                val[key + "2"] = S(t, z2, key)
        U = {}
        for nm in ("P", "Q"):
            a, b = val[nm + "1"], val[nm + "2"]
            at = val[nm + "t1"] + val[nm + "z1"] * jd
            bt = val[nm + "t2"] + val[nm + "z2"] * jd
            U[nm] = (a + b - a * b, at * (1 - b) + bt * (1 - a),
                     val[nm + "zz1"] * (1 - b) + val[nm + "zz2"] * (1 - a)
                     + 2 * val[nm + "z1"] * val[nm + "z2"])
        F1 = U["P"][1] - U["P"][2] - pack.f(t, U["P"][0], U["Q"][0])
        F2 = U["Q"][1] - d * U["Q"][2] - pack.l(t, U["P"][0], U["Q"][0])
        for i, F in enumerate((F1, F2)):
            j = int(np.argmin(F))
            if F[j] < m_sup[i]:
                m_sup[i], w_sup[i] = float(F[j]), (t, float(x[j]))
        # subsolution, branch by branch
        y1, y2 = x + s1, -x + s2
        br = {}
        for nm in ("P", "Q"):
            vals = []
            for y in (y1, y2):
                vals.append((S(t, y, nm), S(t, y, nm + "t") - c * S(t, y, nm + "z"), S(t, y, nm + "zz")))
            pick = vals[0][0] >= vals[1][0]
            cross = np.flatnonzero(np.diff(pick.astype(np.int8)) != 0)
            near = np.zeros(x.size, bool)
            for ci in cross:
                xc = 0.5 * (x[ci] + x[ci + 1])
                near |= np.abs(x - xc) <= kink_band * front.h + 1e-12
            br[nm] = [np.where(pick, vals[0][q], vals[1][q]) for q in range(3)] + [near]
        u, v = br["P"][0], br["Q"][0]
        G1 = br["P"][1] - br["P"][2] - pack.f(t, u, v)
        G2 = br["Q"][1] - d * br["Q"][2] - pack.l(t, u, v)
        for i, (G, nm) in enumerate(((G1, "P"), (G2, "Q"))):
            ok = ~br[nm][3]
            excluded += int((~ok).sum())
            if np.any(ok):
                j = int(np.argmax(np.where(ok, G, -np.inf)))
                if G[j] > m_sub[i]:
                    m_sub[i], w_sub[i] = float(G[j]), (t, float(x[j]))
    viol = max(0.0, -min(m_sup), max(m_sub))
    return EnvelopeReport(tuple(m_sup), tuple(m_sub), tuple(w_sup), tuple(w_sub), excluded,
                          viol, tol, h, dt, bool(viol <= tol))


# --------------------------------------------------------------------------
# entire solutions

@dataclass
class EntireRun:
    omegas: tuple
    n_list: tuple
    T: float
    x: np.ndarray
    times: np.ndarray
    snaps: dict  # n -> (k, 2, nx) array over times[first_index(n):]
    first: dict  # n -> index of -nT in times
    t_end: float
    diagnostics: dict = field(default_factory=dict)

    def solution(self, n: int, t: float) -> np.ndarray:
        i = self.index(t)
        if i < self.first[n]:
            raise InvalidInputError(f"t = {t} precedes the start of run n = {n}")
        return self.snaps[n][i - self.first[n]]

    def index(self, t: float) -> int:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise InvalidInputError(f"t = {t} is not a snapshot time")
        return i

    @property
    def n_max(self) -> int:
        return max(self.n_list)

    def proxy(self) -> np.ndarray:
        """Largest-n solution over its whole time range, shape (k, 2, nx)."""
        return self.snaps[self.n_max]

    def proxy_times(self) -> np.ndarray:
        return self.times[self.first[self.n_max]:]


def _check_far_field(env: EnvelopePair, grid: Grid1D, t0: float, tol: float = 1e-8):
    u, v = env.sub(t0, np.array([-grid.L, grid.L]))
    gap = float(np.max(np.abs(1 - np.concatenate([u, v]))))
    if gap > tol:
        raise PreconditionError(
            f"subsolution at t = {t0} is {gap:.2e} away from equilibrium at x = +-L; enlarge L")


def build_entire(front: FrontProfile, omegas: tuple, n_list: Sequence[int], grid: Grid1D,
                 t_end: float, pack: ReactionPack, curves: Optional[ShiftCurves] = None,
                 snaps_per_period: int = 1, tol: float = 5e-4, margin: float = 10.0,
                 backend=None, check_far_field: bool = True) -> EntireRun:
    """Solve the IVPs started from the subsolution at t = -nT, for each n, on ``grid``."""
    n_list = tuple(int(n) for n in n_list)
    if any(n < 0 for n in n_list) or list(n_list) != sorted(set(n_list)):
        raise InvalidInputError("n_list must be strictly increasing non-negative integers")
    T = front.T
    env = EnvelopePair(front, curves, *omegas)
    if check_far_field:
        _check_far_field(env, grid, -max(n_list) * T)
    st = Stepper(pack, grid, NEUMANN, backend=backend)
    sub_dt = T / snaps_per_period
    steps = int(round(sub_dt / grid.dt))
    if abs(steps * grid.dt - sub_dt) > 1e-9 * sub_dt:
        raise InvalidInputError("snapshot interval must be a multiple of dt")
    k_end = int(round(t_end / sub_dt))
    k0 = -max(n_list) * snaps_per_period
    times = np.arange(k0, k_end + 1) * sub_dt
    x = grid.x
    snaps, first = {}, {}
    for n in n_list:
        t0 = -n * T
        u0, v0 = env.sub(t0, x)
        fld = Field(u0.copy(), v0.copy(), t0)
        nk = k_end + n * snaps_per_period + 1
        rec = np.empty((nk, 2, x.size))
        rec[0, 0], rec[0, 1] = fld.u, fld.v
        for i in range(1, nk):
            st.advance(fld, steps)
            fld.t = t0 + i * sub_dt
            rec[i, 0], rec[i, 1] = fld.u, fld.v
        snaps[n] = rec
        first[n] = int(round((t0 - times[0]) / sub_dt))
    run = EntireRun(tuple(omegas), n_list, T, x, times, snaps, first, float(t_end))
    run.diagnostics = entire_diagnostics(run, env, grid, tol, margin)
    return run


def entire_diagnostics(run: EntireRun, env: EnvelopePair, grid: Grid1D, tol: float = 5e-4,
                       margin: float = 10.0) -> dict:
    win = grid.interior(margin)
    out = {}
    ns = run.n_list
    # monotone in n and Cauchy gaps on the common window t >= -n_min T
    i_common = run.first[ns[0]]
    mono, gaps = np.inf, []
    for a, b in zip(ns[:-1], ns[1:]):
        wa = run.snaps[a][i_common - run.first[a]:][:, :, win]
        wb = run.snaps[b][i_common - run.first[b]:][:, :, win]
        mono = min(mono, float(np.min(wb - wa)))
        gaps.append(float(np.max(np.abs(wb - wa))))
    out["monotone_in_n_min_gap"] = mono if len(ns) > 1 else float("nan")
    out["monotone_in_n"] = bool(len(ns) < 2 or mono >= -tol)
    out["cauchy_gaps"] = tuple(gaps)
    out["cauchy_decreasing"] = bool(all(g2 <= g1 for g1, g2 in zip(gaps[:-1], gaps[1:])))
    # sandwich for t <= 0
    lo_gap, hi_gap = np.inf, np.inf
    worst = None
    xw = run.x[win]
    for n in ns:
        for i in range(run.first[n], len(run.times)):
            t = run.times[i]
            if t > 1e-12:
                break
            w = run.snaps[n][i - run.first[n]][:, win]
            sub = np.array(env.sub(t, xw))
            g = float(np.min(w - sub))
            if g < lo_gap:
                lo_gap = g
                if g < -tol:
                    worst = ("sub", n, float(t), float(xw[int(np.argmin(np.min(w - sub, 0)))]))
            if env.curves is not None:
                sup = np.array(env.super(t, xw))
                g = float(np.min(sup - w))
                if g < hi_gap:
                    hi_gap = g
                    if g < -tol:
                        worst = ("super", n, float(t), float(xw[int(np.argmin(np.min(sup - w, 0)))]))
    out["sandwich_lower_margin"] = lo_gap
    out["sandwich_upper_margin"] = hi_gap if env.curves is not None else float("nan")
    out["sandwich"] = bool(lo_gap >= -tol and (env.curves is None or hi_gap >= -tol))
    out["sandwich_worst"] = worst
    return out


# --------------------------------------------------------------------------
# qualitative properties of the largest-n proxy

@dataclass(frozen=True)
class PropertyResult:
    value: float
    tol: float
    passed: bool


@dataclass(frozen=True)
class PropertyReport:
    results: dict

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results.values())


def period_monotonicity(run: EntireRun, margin_nodes: int = 0) -> float:
    """min over (t, x) of W*(t+T, x) - W*(t, x)."""
    W = run.proxy()
    spp = int(round(run.T / (run.times[1] - run.times[0])))
    sl = slice(margin_nodes, W.shape[2] - margin_nodes) if margin_nodes else slice(None)
    return float(np.min(W[spp:, :, sl] - W[:-spp, :, sl]))


def backward_limit_gap(run: EntireRun, front: FrontProfile, periods_after_start: int = 2) -> float:
    env = EnvelopePair(front, None, *run.omegas)
    t = -run.n_max * run.T + periods_after_start * run.T
    W = run.solution(run.n_max, t)
    x = run.x
    c = front.c
    right = x >= 0
    gap = 0.0
    for k, nm in enumerate(("P", "Q")):
        r = env.sampler(t, x[right] - c * t + run.omegas[0], nm)
        lft = env.sampler(t, -x[~right] - c * t + run.omegas[1], nm)
        gap = max(gap, float(np.max(np.abs(W[k, right] - r))), float(np.max(np.abs(W[k, ~right] - lft))))
    return gap


def forward_spreading_min(run: EntireRun, margin_nodes: int = 0) -> float:
    W = run.solution(run.n_max, run.t_end)
    sl = slice(margin_nodes, W.shape[1] - margin_nodes) if margin_nodes else slice(None)
    return float(W[:, sl].min())


def symmetry_defect(run: EntireRun) -> float:
    W = run.proxy()
    return float(np.max(np.abs(W - W[:, :, ::-1])))


def omega_ordering_gap(run_low: EntireRun, run_high: EntireRun) -> float:
    """min of W_high - W_low over shared snapshots; should be >= 0 when run_low has smaller omegas."""
    n = run_low.n_max
    if run_high.n_max != n or not np.array_equal(run_low.times, run_high.times):
        raise PreconditionError("runs must share n_max and snapshot times")
    return float(np.min(run_high.snaps[n] - run_low.snaps[n]))


def strict_bounds(run: EntireRun, grid: Grid1D, margin: float = 10.0) -> tuple:
    W = run.proxy()[:, :, grid.interior(margin)]
    return float(W.min()), float(W.max())


def translation_omegas(omegas: tuple, c: float, T: float, x0: float) -> tuple:
    """Shifted pair satisfying the integer condition with k* = 1 and spatial shift x0."""
    return omegas[0] - c * T + x0, omegas[1] - c * T - x0


def translation_defect(front: FrontProfile, omegas: tuple, n: int, grid: Grid1D, t_end: float,
                       pack: ReactionPack, x0_nodes: int = 10, margin: float = 10.0) -> dict:
    """Compare the starred run at n with the base run at n - 1 shifted by (T, x0).

    Both are approximants of the same entire solution started from identical data
    up to the node shift, so they agree to interpolation and boundary error.
    """
    T, h = front.T, grid.h
    x0 = x0_nodes * h
    star = translation_omegas(omegas, front.c, T, x0)
    if n < 1:
        raise PreconditionError("translation check needs n >= 1")
    base = build_entire(front, omegas, (n - 1, n), grid, t_end + T, pack)
    sr = build_entire(front, star, (n,), grid, t_end, pack)
    win = grid.interior(margin + abs(x0) + 1e-9)
    idx = np.flatnonzero(win)
    worst = 0.0
    same_n = 0.0
    for i, t in enumerate(sr.times[sr.first[n]:]):
        Ws = sr.snaps[n][i][:, idx]
        Wb = base.solution(n - 1, t + T)[:, idx + x0_nodes]
        worst = max(worst, float(np.max(np.abs(Ws - Wb))))
        if t + T <= base.t_end:
            Wn = base.solution(n, t + T)[:, idx + x0_nodes]
            same_n = max(same_n, float(np.max(np.abs(Ws - Wn))))
    return {"defect": worst, "same_n_defect": same_n, "omega_star": star, "x0": x0}


def check_properties(run: EntireRun, front: FrontProfile, grid: Grid1D, *,
                     symmetric: bool = False, run_lower: Optional[EntireRun] = None,
                     long_run: Optional[EntireRun] = None, translation: Optional[dict] = None,
                     margin: float = 10.0) -> PropertyReport:
    res = {}
    mn = int(round(margin / grid.h))
    v = period_monotonicity(run, mn)
    res["period_monotone"] = PropertyResult(v, 1e-6, v >= -1e-6)
    v = backward_limit_gap(run, front)
    res["backward_limit"] = PropertyResult(v, 0.05, v <= 0.05)
    lo, hi = strict_bounds(run, grid, margin)
    res["strict_bounds"] = PropertyResult(min(lo, 1 - hi), 0.0, lo > 0 and hi < 1)
    if long_run is not None:
        v = forward_spreading_min(long_run, mn)
        res["forward_spreading"] = PropertyResult(v, 0.05, v >= 0.95)
    if run_lower is not None:
        v = omega_ordering_gap(run_lower, run)
        res["omega_monotone"] = PropertyResult(v, 1e-10, v >= -1e-10)
    if symmetric:
        v = symmetry_defect(run)
        res["symmetry"] = PropertyResult(v, 1e-10, v <= 1e-10)
    if translation is not None:
        v = translation["defect"]
        res["translation"] = PropertyResult(v, 1e-4, v <= 1e-4)
    return PropertyReport(res)


@dataclass(frozen=True)
class ConvergenceReport:
    omegas: tuple
    gaps: tuple
    monotone: bool
    final_gap: float
    passed: bool


def convergence_in_omega(front: FrontProfile, omega1: Optional[float], omega2_seq: Sequence[float],
                         n: int, grid: Grid1D, pack: ReactionPack, window: tuple,
                         tol: float = 0.05) -> ConvergenceReport:
    """Window gap to the single front as omega2 decreases; ``omega1=None`` moves both shifts.

    With both shifts moving the reference is 0 (the window empties toward the unstable state).
    """
    x = grid.x
    sel = (x >= window[0]) & (x <= window[1])
    env_ref = EnvelopePair(front, None, 0.0, 0.0)
    gaps, pairs = [], []
    for w2 in omega2_seq:
        pair = (w2, w2) if omega1 is None else (omega1, w2)
        run = build_entire(front, pair, (n,), grid, 0.0, pack)
        W = run.solution(n, 0.0)[:, sel]
        if omega1 is None:
            gaps.append(float(np.max(np.abs(W))))
        else:
            ref = np.array([env_ref.sampler(0.0, x[sel] + omega1, nm) for nm in ("P", "Q")])
            gaps.append(float(np.max(np.abs(W - ref))))
        pairs.append(pair)
    mono = all(b <= a + 1e-12 for a, b in zip(gaps[:-1], gaps[1:]))
    return ConvergenceReport(tuple(pairs), tuple(gaps), mono, gaps[-1], bool(mono and gaps[-1] <= tol))


# --------------------------------------------------------------------------
# reflection for fronts with positive speed

def reflect_coefficients(coeffs: CoefficientSet) -> CoefficientSet:
    """Species swap turning ``(1-v, 1-u)`` at x / sqrt(d) into a solution of the same normal form.

    The map is an involution; ``d`` goes to ``1/d``.
    """
    return replace(coeffs, d=1.0 / coeffs.d, r1=coeffs.r2, r2=coeffs.r1,
                   a1=coeffs.b2, b2=coeffs.a1, b1=coeffs.a2, a2=coeffs.b1)


@dataclass(frozen=True)
class ReflectedProblem:
    original: CoefficientSet
    coeffs: CoefficientSet
    scale: float  # x_original = scale * x_reflected

    def back(self) -> CoefficientSet:
        return self.original


def reflect_for_positive_c(coeffs: CoefficientSet, c: Optional[float] = None) -> ReflectedProblem:
    """Reflect when the front speed is positive; a non-positive speed gives the identity map."""
    if c is not None and c <= 0:
        log.info("front speed %.3g is not positive; reflection is a no-op", c)
        return ReflectedProblem(coeffs, coeffs, 1.0)
    return ReflectedProblem(coeffs, reflect_coefficients(coeffs), math.sqrt(coeffs.d))


def reflect_orbit(orbit: PeriodicOrbit) -> PeriodicOrbit:
    return PeriodicOrbit(orbit.tgrid, orbit.q, orbit.p, orbit.q0, orbit.p0, orbit.T,
                         orbit.q_series, orbit.p_series)


def reflect_front(front: FrontProfile) -> FrontProfile:
    """Front of the reflected problem: P'(t,z) = 1 - Q(t, -sqrt(d) z), Q' = 1 - P(t, -sqrt(d) z).

    The result is re-phased so that P'(0, 0) = 1/2.
    """
    s = math.sqrt(front.d)
    z = -front.zgrid[::-1] / s
    P = 1.0 - front.Q[:, ::-1]
    Q = 1.0 - front.P[:, ::-1]
    Pz = s * front.Qz[:, ::-1]
    Qz = s * front.Pz[:, ::-1]
    h = float(z[1] - z[0])
    g = lambda y: float(interp_points(P[0], z[0], h, np.array([y]), 4, 0.0, 1.0)[0]) - 0.5  # noqa: E731
    i = int(np.searchsorted(P[0], 0.5))
    z0 = brentq(g, z[max(i - 1, 0)], z[min(i, z.size - 1)], xtol=1e-15, rtol=1e-15)
    meta = dict(front.meta)
    meta.update({"h": front.meta.get("h", front.h) / s, "reflected": True})
    return replace(front, zgrid=z - z0, P=P, Q=Q, Pz=Pz, Qz=Qz, c=-front.c / s,
                   phase=float(z0), d=1.0 / front.d, meta=meta)


@dataclass(frozen=True)
class BackTransformed:
    x: np.ndarray
    times: np.ndarray
    W: np.ndarray  # (k, 2, nx) in the original variables


def back_transform_entire(run: EntireRun, n: int, scale: float) -> BackTransformed:
    """Entire-run snapshots of the reflected problem mapped to the original variables."""
    S = run.snaps[n]
    W = np.empty_like(S)
    W[:, 0] = 1.0 - S[:, 1]
    W[:, 1] = 1.0 - S[:, 0]
    return BackTransformed(run.x * scale, run.times[run.first[n]:], W)


def reflect_grid(grid: Grid1D, scale: float) -> Grid1D:
    """Grid of the original problem matching a reflected-problem grid."""
    return Grid1D(grid.L * scale, grid.h * scale, grid.dt)
