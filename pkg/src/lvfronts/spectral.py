"""Decay exponents, periodic eigenfunctions and boundary eigenpairs of the linearized front problem.

All periodic functions are returned as :class:`TrigSeries` normalized to 1 at t = 0.
Conventions follow :class:`lvfronts.kinetics.ReactionPack`: ``A = a1 p``, ``B = b1 q``,
``C = b2 q``, ``D = a2 p``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._trig import TrigSeries
from .errors import (AssumptionError, ConsistencyError, PreconditionError, RegimeError,
                     ZeroSpeedError)
from .kinetics import CoefficientSet, PeriodicOrbit, ReactionPack

DEGENERATE_TOL = 0.02
ZERO_SPEED_TOL = 1e-6


def _products(coeffs: CoefficientSet, orbit: PeriodicOrbit):
    pack = ReactionPack(coeffs, orbit)
    return pack.A, pack.B, pack.C, pack.D


def compute_kappas(coeffs: CoefficientSet, orbit: PeriodicOrbit):
    A, B, C, D = _products(coeffs, orbit)
    k1, k2, k3, k4 = A.mean, D.mean - C.mean, B.mean - A.mean, C.mean
    if not k2 > 0:
        raise AssumptionError(f"mean(a2 p - b2 q) = {k2:.6g} is not positive")
    if not k3 > 0:
        raise AssumptionError(f"mean(b1 q - a1 p) = {k3:.6g} is not positive")
    return (float(k1), float(k2), float(k3), float(k4))


def compute_nus(kappas, c: float, d: float):
    if abs(c) <= ZERO_SPEED_TOL:
        raise ZeroSpeedError(f"standing wave (c = {c:.3g}): decay exponents undefined", c)
    k1, k2, k3, k4 = kappas
    if min(kappas) <= 0 or d <= 0:
        raise PreconditionError("kappas and d must be positive")
    nu1 = (-c - np.sqrt(c * c + 4 * k1)) / 2
    nu2 = (-c - np.sqrt(c * c + 4 * d * k2)) / (2 * d)
    nu3 = (-c + np.sqrt(c * c + 4 * k3)) / 2
    nu4 = (-c + np.sqrt(c * c + 4 * d * k4)) / (2 * d)
    return (float(nu1), float(nu2), float(nu3), float(nu4))


def quadratic_residuals(kappas, nus, c: float, d: float):
    k1, k2, k3, k4 = kappas
    n1, n2, n3, n4 = nus
    return (n1 * n1 + c * n1 - k1, d * n2 * n2 + c * n2 - k2,
            n3 * n3 + c * n3 - k3, d * n4 * n4 + c * n4 - k4)


def _degenerate(a: float, b: float, tol: float = DEGENERATE_TOL) -> bool:
    return abs(a - b) <= tol * max(abs(a), abs(b))


def classify_plus(nus, tol: float = DEGENERATE_TOL) -> str:
    n1, n2 = nus[0], nus[1]
    if _degenerate(n1, n2, tol):
        return "degenerate"
    return "regular" if n1 < n2 else "reversed"


def classify_minus(nus, tol: float = DEGENERATE_TOL) -> str:
    n3, n4 = nus[2], nus[3]
    if _degenerate(n3, n4, tol):
        return "degenerate"
    return "regular" if n4 > n3 else "reversed"


def _exp_antiderivative(g: TrigSeries) -> TrigSeries:
    """``exp(int_0^t (g - mean g))`` as a periodic series, equal to 1 at t = 0."""
    return g.antiderivative().exp()


def periodicity_defect(fn: TrigSeries) -> float:
    """|f(T) - f(0)| evaluated through the explicit mode sum."""
    return float(abs(fn(fn.period) - fn(0.0)))


def eigenfunctions(coeffs: CoefficientSet, orbit: PeriodicOrbit, kappas=None):
    """``(phi1, phi2, psi1, psi2)``: the principal periodic eigenfunctions at the two ends.

    phi1 solves w' = (k1 - A) w, phi2 solves w' = (k2 - (D - C)) w,
    psi1 solves w' = (A - B + k3) w and psi2 solves w' = (k4 - C) w.
    """
    A, B, C, D = _products(coeffs, orbit)
    out = (
        _exp_antiderivative(-A),
        _exp_antiderivative(C - D),
        _exp_antiderivative(A - B),
        _exp_antiderivative(-C),
    )
    for name, fn in zip(("phi1", "phi2", "psi1", "psi2"), out):
        defect = periodicity_defect(fn)
        if defect > 1e-6:
            raise ConsistencyError(f"{name} periodicity defect {defect:.3g}")
        if fn.min_on() <= 0:
            raise ConsistencyError(f"{name} is not positive")
    return out


def forced_periodic_solution(upsilon: float, decay: TrigSeries, forcing: TrigSeries,
                             label: str = "forced") -> TrigSeries:
    """Periodic solution of ``w' = (upsilon - decay(t)) w + forcing(t)``.

    Variation of constants with ``E(t) = int_0^t (upsilon - decay)``:
    ``w(0) = e^{E(T)} J(T) / (1 - e^{E(T)})``, ``J(t) = int_0^t e^{-E} forcing``.
    The denominator is positive iff ``upsilon < mean(decay)``.
    """
    T = decay.period
    growth = upsilon - decay.mean
    if not growth < 0:
        raise RegimeError(f"{label}: no positive periodic solution (upsilon - mean = {growth:.6g} >= 0)")
    osc = decay.antiderivative()                    # E(t) = growth t - osc(t)
    weight = osc.exp() * forcing                    # e^{-E(s)} forcing(s) = e^{-growth s} weight(s)
    J_T = weight.weighted_integral(-growth, T)
    w0 = np.exp(growth * T) * J_T / (-np.expm1(growth * T))

    def w(t):
        return np.exp(growth * t - osc(t)) * (w0 + weight.weighted_integral(-growth, t))

    return TrigSeries.from_function(w, T)


def forced_residual(w: TrigSeries, upsilon: float, decay: TrigSeries, forcing: TrigSeries,
                    m: int = 512) -> float:
    t = np.arange(m) * (w.period / m)
    r = w.derivative()(t) - (upsilon - decay(t)) * w(t) - forcing(t)
    return float(np.max(np.abs(r)))


def tilde_eigenfunctions(coeffs: CoefficientSet, orbit: PeriodicOrbit, nus, c: float, d: float,
                         eig=None):
    """``((tilde_phi1, label), (tilde_psi2, label))``; a function is None outside its regime.

    tilde_phi1 is the periodic solution of w' = (u1 - A) w + B phi2 with u1 = nu2^2 + c nu2;
    tilde_psi2 solves w' = (u2 - C) w + D psi1 with u2 = d nu3^2 + c nu3.
    """
    A, B, C, D = _products(coeffs, orbit)
    phi1, phi2, psi1, psi2 = eig if eig is not None else eigenfunctions(coeffs, orbit)
    n1, n2, n3, n4 = nus
    u1 = n2 * n2 + c * n2
    u2 = d * n3 * n3 + c * n3
    if u1 < A.mean:
        tphi = (forced_periodic_solution(u1, A, B * phi2, "tilde_phi1"), "valid")
    else:
        tphi = (None, "absent: nu1 >= nu2")
    if u2 < C.mean:
        tpsi = (forced_periodic_solution(u2, C, D * psi1, "tilde_psi2"), "valid")
    else:
        tpsi = (None, "absent: nu4 <= nu3")
    return tphi, tpsi


def theta_plus(k1: float, nu1: float, c: float, B: TrigSeries, phi1: TrigSeries,
               phi2: TrigSeries) -> float:
    den = 2 * nu1 + c
    if den == 0:
        raise RegimeError("degenerate denominator 2 nu1 + c = 0")
    rho = (B * phi2 / phi1) * k1
    return float(-rho.mean / den)


def theta_minus(k3: float, nu4: float, c: float, d: float, D: TrigSeries, psi1: TrigSeries,
                psi2: TrigSeries) -> float:
    den = 2 * d * nu4 + c
    if den == 0:
        raise RegimeError("degenerate denominator 2 d nu4 + c = 0")
    rho = (D * psi1 / psi2) * k3
    return float(rho.mean / den)


def degenerate_amplitudes(k1_or_k3, nus, c: float, coeffs: CoefficientSet, orbit: PeriodicOrbit,
                          eig=None):
    """``(theta1, theta2)``; each is None unless its side is in the equal-exponent regime.

    ``k1_or_k3`` is either a scalar (used for whichever side applies) or a pair ``(k1, k3)``.
    """
    if np.ndim(k1_or_k3) == 0:
        k1 = k3 = float(k1_or_k3)
    else:
        k1, k3 = map(float, k1_or_k3)
    A, B, C, D = _products(coeffs, orbit)
    phi1, phi2, psi1, psi2 = eig if eig is not None else eigenfunctions(coeffs, orbit)
    th1 = th2 = None
    if classify_plus(nus) == "degenerate":
        th1 = theta_plus(k1, nus[0], c, B, phi1, phi2)
    if classify_minus(nus) == "degenerate":
        th2 = theta_minus(k3, nus[3], c, coeffs.d, D, psi1, psi2)
    return th1, th2


@dataclass(frozen=True)
class PerturbedExponents:
    epsilon: float
    nu2_eps_plus: Optional[float]
    nu2_eps_minus: Optional[float]
    nu3_eps_plus: Optional[float]
    nu3_eps_minus: Optional[float]
    C1_plus: float
    C1_minus: float
    C2_plus: float
    C2_minus: float
    eps_max_plus: float
    eps_max_minus: float


def perturbed_exponents(coeffs: CoefficientSet, orbit: PeriodicOrbit, kappas, c: float, d: float,
                        eps: float, side: str = "both") -> PerturbedExponents:
    """Shifted exponents used by the two-sided tail bounds.

    ``side`` selects which admissible interval ``eps`` must lie in: ``"plus"``
    (0, min(1, k2/C1+)), ``"minus"`` (0, min(1, k3/C2+)) or ``"both"``.
    """
    A, B, C, D = _products(coeffs, orbit)
    C1p, C1m, C2p, C2m = D.max_on(), C.max_on(), B.max_on(), A.max_on()
    k1, k2, k3, k4 = kappas
    bp, bm = min(1.0, k2 / C1p), min(1.0, k3 / C2p)
    want_p = side in ("both", "plus")
    want_m = side in ("both", "minus")
    if side not in ("both", "plus", "minus"):
        raise PreconditionError(f"unknown side {side!r}")
    if not eps > 0 or (want_p and eps >= bp) or (want_m and eps >= bm):
        raise PreconditionError(
            f"epsilon {eps} outside admissible range (plus: <{bp:.6g}, minus: <{bm:.6g})")
    n2p = n2m = n3p = n3m = None
    if want_p:
        n2p = (-c - np.sqrt(c * c + 4 * d * (k2 - C1p * eps))) / (2 * d)
        n2m = (-c - np.sqrt(c * c + 4 * d * (k2 + C1m * eps))) / (2 * d)
    if want_m:
        n3p = (-c + np.sqrt(c * c + 4 * (k3 - C2p * eps))) / 2
        n3m = (-c + np.sqrt(c * c + 4 * (k3 + C2m * eps))) / 2
    f = lambda x: None if x is None else float(x)  # noqa: E731
    return PerturbedExponents(float(eps), f(n2p), f(n2m), f(n3p), f(n3m),
                              C1p, C1m, C2p, C2m, bp, bm)


@dataclass(frozen=True)
class BoundaryEigenpairs:
    lambda0: float
    lambda1: float
    phi0: TrigSeries
    psi0: TrigSeries
    phi1b: TrigSeries
    psi1b: TrigSeries

    def residuals(self, pack: ReactionPack, m: int = 512) -> tuple:
        """Max residuals of the two periodic eigen-systems on a uniform grid."""
        t = np.arange(m) * (pack.T / m)
        A, B, C, D = pack.products(t)
        p0, s0, p1, s1 = (fn(t) for fn in (self.phi0, self.psi0, self.phi1b, self.psi1b))
        dp0, ds0, dp1, ds1 = (fn.derivative()(t) for fn in (self.phi0, self.psi0, self.phi1b, self.psi1b))
        r0 = max(np.abs(dp0 - ((A - B) + self.lambda0) * p0).max(),
                 np.abs(ds0 - (D * p0 + (-C + self.lambda0) * s0)).max())
        r1 = max(np.abs(ds1 - ((C - D) + self.lambda1) * s1).max(),
                 np.abs(dp1 - ((-A + self.lambda1) * p1 + B * s1)).max())
        return float(r0), float(r1)


def boundary_eigenpairs(coeffs: CoefficientSet, orbit: PeriodicOrbit,
                        pack: ReactionPack | None = None) -> BoundaryEigenpairs:
    """Principal periodic eigenpairs of the linearizations at (0,0) and (1,1).

    At (0,0): f_u = A - B, f_v = 0, l_u = D, l_v = -C.
    At (1,1): f_u = -A, f_v = B, l_u = 0, l_v = C - D.
    """
    pack = pack or ReactionPack(coeffs, orbit)
    A, B, C, D = pack.A, pack.B, pack.C, pack.D
    lam0 = -(A.mean - B.mean)
    lam1 = -(C.mean - D.mean)
    if not (lam0 > 0 and lam1 > 0):
        raise RegimeError(f"boundary eigenvalues not positive: lambda0={lam0:.6g}, lambda1={lam1:.6g}")
    phi0 = _exp_antiderivative(A - B)
    psi1b = _exp_antiderivative(C - D)
    try:
        psi0 = forced_periodic_solution(lam0, C, D * phi0, "psi0")
    except RegimeError as exc:
        raise RegimeError(f"{exc}; requires lambda0 < mean(b2 q)") from None
    try:
        phi1b = forced_periodic_solution(lam1, A, B * psi1b, "phi1b")
    except RegimeError as exc:
        raise RegimeError(f"{exc}; requires lambda1 < mean(a1 p)") from None
    for name, fn in (("phi0", phi0), ("psi0", psi0), ("phi1b", phi1b), ("psi1b", psi1b)):
        if fn.min_on() <= 0:
            raise ConsistencyError(f"boundary eigenfunction {name} is not positive")
    return BoundaryEigenpairs(float(lam0), float(lam1), phi0, psi0, phi1b, psi1b)


@dataclass(frozen=True)
class SpectralPack:
    c: float
    d: float
    T: float
    kappa1: float
    kappa2: float
    kappa3: float
    kappa4: float
    nu1: float
    nu2: float
    nu3: float
    nu4: float
    phi1: TrigSeries = field(repr=False)
    phi2: TrigSeries = field(repr=False)
    psi1: TrigSeries = field(repr=False)
    psi2: TrigSeries = field(repr=False)
    tilde_phi1: Optional[TrigSeries] = field(repr=False, default=None)
    tilde_psi2: Optional[TrigSeries] = field(repr=False, default=None)
    tilde_phi1_label: str = ""
    tilde_psi2_label: str = ""
    plus_case: str = ""
    minus_case: str = ""
    theta1: Optional[float] = None
    theta2: Optional[float] = None
    boundary: Optional[BoundaryEigenpairs] = field(repr=False, default=None)

    @property
    def kappas(self):
        return (self.kappa1, self.kappa2, self.kappa3, self.kappa4)

    @property
    def nus(self):
        return (self.nu1, self.nu2, self.nu3, self.nu4)

    def sampled(self, m: int = 256) -> dict:
        t = np.arange(m) * (self.T / m)
        out = {"t": t}
        for name in ("phi1", "phi2", "psi1", "psi2", "tilde_phi1", "tilde_psi2"):
            fn = getattr(self, name)
            if fn is not None:
                out[name] = fn(t)
        return out

    def with_thetas(self, theta1, theta2) -> "SpectralPack":
        from dataclasses import replace
        return replace(self, theta1=theta1, theta2=theta2)


def spectral_pack(coeffs: CoefficientSet, orbit: PeriodicOrbit, c: float,
                  with_boundary: bool = True) -> SpectralPack:
    kap = compute_kappas(coeffs, orbit)
    nus = compute_nus(kap, c, coeffs.d)
    eig = eigenfunctions(coeffs, orbit, kap)
    (tphi, lphi), (tpsi, lpsi) = tilde_eigenfunctions(coeffs, orbit, nus, c, coeffs.d, eig)
    bnd = boundary_eigenpairs(coeffs, orbit) if with_boundary else None
    return SpectralPack(float(c), coeffs.d, coeffs.T, *kap, *nus, *eig,
                        tilde_phi1=tphi, tilde_psi2=tpsi,
                        tilde_phi1_label=lphi, tilde_psi2_label=lpsi,
                        plus_case=classify_plus(nus), minus_case=classify_minus(nus),
                        boundary=bnd)
