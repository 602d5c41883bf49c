"""Periodic coefficients, structural assumptions, semi-trivial orbits and reaction terms."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._trig import TrigSeries
from .errors import InvalidInputError, PreconditionError

STRICT_MARGIN = 1e-10


@dataclass(frozen=True)
class PeriodicFn:
    """``mean + sum_k (cos_k cos(2 pi k t/T) + sin_k sin(2 pi k t/T))``."""

    mean: float
    harmonics: tuple = ()
    period: float = 1.0

    def __post_init__(self):
        h = tuple((float(a), float(b)) for a, b in self.harmonics)
        object.__setattr__(self, "harmonics", h)
        object.__setattr__(self, "mean", float(self.mean))
        object.__setattr__(self, "period", float(self.period))
        vals = [self.mean, self.period] + [x for ab in h for x in ab]
        if not np.all(np.isfinite(vals)):
            raise InvalidInputError("periodic function has non-finite amplitudes")
        if self.period <= 0:
            raise InvalidInputError("period must be positive")

    @classmethod
    def constant(cls, value: float, period: float = 1.0) -> "PeriodicFn":
        return cls(value, (), period)

    @classmethod
    def from_triples(cls, mean: float, triples: Sequence, period: float) -> "PeriodicFn":
        """Build from ``[k, cos_amp, sin_amp]`` triples (k >= 1, repeated k accumulate)."""
        kmax = max((int(tr[0]) for tr in triples), default=0)
        h = np.zeros((kmax, 2))
        for tr in triples:
            k = int(tr[0])
            if k < 1 or k != tr[0]:
                raise InvalidInputError(f"harmonic index must be an integer >= 1, got {tr[0]!r}")
            h[k - 1] += (float(tr[1]), float(tr[2]))
        return cls(mean, tuple(map(tuple, h)), period)

    def series(self) -> TrigSeries:
        c = [self.mean] + [0.5 * (a - 1j * b) for a, b in self.harmonics]
        return TrigSeries(c, self.period)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.full(t.shape, self.mean)
        w = 2.0 * np.pi / self.period
        for k, (a, b) in enumerate(self.harmonics, start=1):
            out = out + a * np.cos(w * k * t) + b * np.sin(w * k * t)
        return out if out.shape else float(out)

    def to_triples(self):
        return [[k, a, b] for k, (a, b) in enumerate(self.harmonics, start=1) if a or b]


COEFF_NAMES = ("r1", "r2", "a1", "a2", "b1", "b2")


@dataclass(frozen=True)
class CoefficientSet:
    T: float
    d: float
    r1: PeriodicFn
    r2: PeriodicFn
    a1: PeriodicFn
    a2: PeriodicFn
    b1: PeriodicFn
    b2: PeriodicFn

    def __post_init__(self):
        if not (np.isfinite(self.T) and self.T > 0):
            raise InvalidInputError(f"T must be positive and finite, got {self.T}")
        if not (np.isfinite(self.d) and self.d > 0):
            raise InvalidInputError(f"d must be positive and finite, got {self.d}")
        for name in COEFF_NAMES:
            fn = getattr(self, name)
            if abs(fn.period - self.T) > 1e-14 * self.T:
                object.__setattr__(self, name, PeriodicFn(fn.mean, fn.harmonics, self.T))

    @classmethod
    def constant(cls, T=1.0, d=1.0, r1=1.0, r2=1.0, a1=1.0, a2=1.0, b1=1.0, b2=1.0):
        mk = lambda v: PeriodicFn.constant(v, T)  # noqa: E731
        return cls(T, d, mk(r1), mk(r2), mk(a1), mk(a2), mk(b1), mk(b2))

    def replace(self, **kw) -> "CoefficientSet":
        vals = {n: getattr(self, n) for n in ("T", "d") + COEFF_NAMES}
        vals.update(kw)
        return CoefficientSet(**vals)

    def series(self, name: str) -> TrigSeries:
        return getattr(self, name).series()


def periodic_average(f, T: float | None = None) -> float:
    """Period average of a :class:`PeriodicFn`, a :class:`TrigSeries` or uniform samples."""
    if isinstance(f, PeriodicFn):
        return f.mean
    if isinstance(f, TrigSeries):
        return f.mean
    y = np.asarray(f, dtype=float)
    if y.ndim != 1 or y.size == 0 or not np.all(np.isfinite(y)):
        raise InvalidInputError("periodic_average needs a finite 1-D sample array")
    # trapezoid on a periodic uniform grid is the plain mean
    return float(np.mean(y))


@dataclass(frozen=True)
class AssumptionReport:
    a1_ok: bool
    a2_ok: bool
    a3_ok: bool
    margins: dict
    extras: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.a1_ok and self.a2_ok and self.a3_ok

    def failures(self) -> list:
        return [k for k, v in self.margins.items() if not v > STRICT_MARGIN]


def check_assumptions(coeffs: CoefficientSet, grid_size: int = 2048) -> AssumptionReport:
    t = np.arange(max(grid_size, 16)) * (coeffs.T / max(grid_size, 16))
    vals = {n: getattr(coeffs, n)(t) for n in COEFF_NAMES}
    rb1, rb2 = coeffs.r1.mean, coeffs.r2.mean
    pos = min(vals[n].min() for n in ("a1", "a2", "b1", "b2"))
    margins = {
        "A1_positivity": float(pos),
        "A1_mean_r1": rb1,
        "A1_mean_r2": rb2,
    }
    a1_ok = all(v > STRICT_MARGIN for v in margins.values())
    extras: dict = {}
    if a1_ok:
        b_ratio = vals["b1"] / vals["b2"]
        a_ratio = vals["a2"] / vals["a1"]
        margins["A2_first"] = float(b_ratio.min() * rb2 - rb1)
        margins["A2_second"] = float(a_ratio.min() * rb1 - rb2)
        margins["A3_first"] = float(rb1 + rb2 - a_ratio.max() * rb1)
        margins["A3_second"] = float(rb1 + rb2 - b_ratio.max() * rb2)
        orbit = compute_orbits(coeffs, 256)
        p, q = orbit.p, orbit.q
        extras["mean_b1q_minus_a1p"] = float(np.mean(vals_at(coeffs, "b1", orbit) * q - vals_at(coeffs, "a1", orbit) * p))
        extras["mean_a2p_minus_b2q"] = float(np.mean(vals_at(coeffs, "a2", orbit) * p - vals_at(coeffs, "b2", orbit) * q))
    else:
        for k in ("A2_first", "A2_second", "A3_first", "A3_second"):
            margins[k] = float("nan")
    a2_ok = a1_ok and margins["A2_first"] > STRICT_MARGIN and margins["A2_second"] > STRICT_MARGIN
    a3_ok = a1_ok and margins["A3_first"] > STRICT_MARGIN and margins["A3_second"] > STRICT_MARGIN
    return AssumptionReport(bool(a1_ok), bool(a2_ok), bool(a3_ok), margins, extras)


def vals_at(coeffs: CoefficientSet, name: str, orbit: "PeriodicOrbit") -> np.ndarray:
    return getattr(coeffs, name)(orbit.tgrid)


@dataclass(frozen=True)
class PeriodicOrbit:
    tgrid: np.ndarray
    p: np.ndarray
    q: np.ndarray
    p0: float
    q0: float
    T: float
    p_series: TrigSeries = field(repr=False, compare=False, default=None)
    q_series: TrigSeries = field(repr=False, compare=False, default=None)

    @property
    def M(self) -> int:
        return self.tgrid.size

    def p_at(self, t):
        return self.p_series(t)

    def q_at(self, t):
        return self.q_series(t)


def _logistic_orbit(r: PeriodicFn, a: PeriodicFn) -> tuple[float, TrigSeries]:
    """Positive periodic solution of ``y' = y (r - a y)`` in closed form.

    With ``R(t) = int_0^t r`` and ``I(t) = int_0^t exp(R) a``:
    ``y(t) = y0 exp(R(t)) / (1 + y0 I(t))`` and ``y0 = (exp(R(T)) - 1) / I(T)``.
    """
    T = r.period
    rbar = r.mean
    if not rbar > 0:
        raise PreconditionError(f"mean growth rate must be positive, got {rbar}")
    rs = r.series()
    osc = rs.antiderivative()          # R(t) - rbar t, periodic
    weight = osc.exp() * a.series()    # exp(R - rbar t) a, periodic
    I_T = weight.weighted_integral(rbar, T)
    y0 = np.expm1(rbar * T) / I_T

    def y(t):
        return y0 * np.exp(rbar * t + osc(t)) / (1.0 + y0 * weight.weighted_integral(rbar, t))

    return float(y0), TrigSeries.from_function(y, T)


def compute_orbits(coeffs: CoefficientSet, M: int = 256) -> PeriodicOrbit:
    if M < 64:
        raise PreconditionError(f"need at least 64 time samples, got {M}")
    if coeffs.a1.series().min_on() <= 0 or coeffs.b2.series().min_on() <= 0:
        raise PreconditionError("self-limitation coefficients must be positive")
    p0, ps = _logistic_orbit(coeffs.r1, coeffs.a1)
    q0, qs = _logistic_orbit(coeffs.r2, coeffs.b2)
    tgrid = np.arange(M) * (coeffs.T / M)
    p, q = ps.sample(M), qs.sample(M)
    if p.min() <= 0 or q.min() <= 0:
        raise PreconditionError("semi-trivial orbit lost positivity")
    return PeriodicOrbit(tgrid, p, q, p0, q0, coeffs.T, ps, qs)


def _fd4_periodic(y: np.ndarray, dt: float) -> np.ndarray:
    return (-np.roll(y, -2) + 8 * np.roll(y, -1) - 8 * np.roll(y, 1) + np.roll(y, 2)) / (12 * dt)


def orbit_residual(orbit: PeriodicOrbit, coeffs: CoefficientSet) -> float:
    """Max ODE residual with a 4th-order periodic finite-difference derivative."""
    t = orbit.tgrid
    dt = coeffs.T / t.size
    rp = _fd4_periodic(orbit.p, dt) - orbit.p * (coeffs.r1(t) - coeffs.a1(t) * orbit.p)
    rq = _fd4_periodic(orbit.q, dt) - orbit.q * (coeffs.r2(t) - coeffs.b2(t) * orbit.q)
    return float(max(np.abs(rp).max(), np.abs(rq).max()))


class ReactionPack:
    """Normalized reaction terms built from the four products a1 p, b1 q, b2 q, a2 p.

    Naming: ``A = a1 p``, ``B = b1 q``, ``C = b2 q``, ``D = a2 p``.  Then

    * ``f = A u (1-u) - B u (1-v)``,   ``l = (1-v)(D u - C v)``
    * ``g = -(1-u)(A u - B v)``,       ``h = -v (D (1-u) - C (1-v))``
    """

    def __init__(self, coeffs: CoefficientSet, orbit: PeriodicOrbit):
        self.coeffs = coeffs
        self.orbit = orbit
        self.T = coeffs.T
        self.d = coeffs.d
        ps, qs = orbit.p_series, orbit.q_series
        self.A = (coeffs.series("a1") * ps).trimmed()
        self.B = (coeffs.series("b1") * qs).trimmed()
        self.C = (coeffs.series("b2") * qs).trimmed()
        self.D = (coeffs.series("a2") * ps).trimmed()

    def products(self, t):
        """``(A, B, C, D)`` evaluated at ``t``."""
        return self.A(t), self.B(t), self.C(t), self.D(t)

    def table(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.ascontiguousarray(np.stack(self.products(t), axis=-1))

    def _abcd(self, t, u):
        A, B, C, D = self.products(t)
        nd = np.ndim(u)
        if np.ndim(A) and nd > np.ndim(A):
            pad = (slice(None),) + (None,) * (nd - np.ndim(A))
            A, B, C, D = A[pad], B[pad], C[pad], D[pad]
        return A, B, C, D

    def N1(self, t):
        return self.B(t) / self.A(t)

    def N2(self, t):
        return self.D(t) / self.C(t)

    def f(self, t, u, v):
        A, B, C, D = self._abcd(t, u)
        return A * u * (1 - u) - B * u * (1 - v)

    def l(self, t, u, v):  # noqa: E743
        A, B, C, D = self._abcd(t, u)
        return (1 - v) * (D * u - C * v)

    def g(self, t, u, v):
        A, B, C, D = self._abcd(t, u)
        return -(1 - u) * (A * u - B * v)

    def h(self, t, u, v):
        A, B, C, D = self._abcd(t, u)
        return -v * (D * (1 - u) - C * (1 - v))

    def f_u(self, t, u, v):
        A, B, C, D = self._abcd(t, u)
        return A * (1 - 2 * u) - B * (1 - v)

    def f_v(self, t, u, v):
        A, B, C, D = self._abcd(t, u)
        return B * u + 0 * v

    def l_u(self, t, u, v):
        A, B, C, D = self._abcd(t, u)
        return D * (1 - v) + 0 * u

    def l_v(self, t, u, v):
        A, B, C, D = self._abcd(t, u)
        return -D * u + C * (2 * v - 1)

    def g_u(self, t, u, v):
        A, B, C, D = self._abcd(t, u)
        return A * (2 * u - 1) - B * v

    def g_v(self, t, u, v):
        A, B, C, D = self._abcd(t, u)
        return B * (1 - u) + 0 * v

    def h_u(self, t, u, v):
        A, B, C, D = self._abcd(t, u)
        return D * v + 0 * u

    def h_v(self, t, u, v):
        A, B, C, D = self._abcd(t, u)
        return -D * (1 - u) + C * (1 - 2 * v)

    def lipschitz_bound(self, m: int = 512) -> float:
        """Max over a period and the unit square of the row sums of the Jacobian."""
        t = np.arange(m) * (self.T / m)
        A, B, C, D = (np.abs(s) for s in self.products(t))
        # |f_u| + |f_v| <= A + B + B, |l_u| + |l_v| <= D + D + C on [0,1]^2
        return float(max((A + 2 * B).max(), (2 * D + C).max()))


def reaction_pack(coeffs: CoefficientSet, orbit: PeriodicOrbit) -> ReactionPack:
    return ReactionPack(coeffs, orbit)
