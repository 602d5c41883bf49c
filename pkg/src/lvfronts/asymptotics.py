"""Tail-decay fits, a priori tail bounds, front constants and the ratio bounds behind the supersolution."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NumericalError, PreconditionError
from .front import FrontOptions, FrontProfile, compute_front, interp_points
from .kinetics import CoefficientSet, ReactionPack, compute_orbits
from .spectral import PerturbedExponents, SpectralPack, spectral_pack

log = logging.getLogger(__name__)

WINDOW_LO, WINDOW_HI = 1e-8, 1e-3
MIN_NODES = 20
SAFETY = 0.05


class InsufficientTailError(NumericalError):
    pass


@dataclass(frozen=True)
class DecayFit:
    side: str
    component: str
    model: str
    rate: float
    amplitude: float
    rms_residual: float
    window: tuple
    predicted_rate: float = float("nan")
    predicted_eigenfunction: str = ""
    case: str = ""
    rms_pure: float = float("nan")
    rms_lte: float = float("nan")
    preferred: str = ""
    alt_rate: float = float("nan")
    alt_amplitude: float = float("nan")
    deriv_rate: float = float("nan")
    model_deriv_rate: float = float("nan")
    n_nodes: int = 0

    @property
    def rel_error(self) -> float:
        return abs(self.rate - self.predicted_rate) / abs(self.predicted_rate)

    @property
    def deriv_rel_error(self) -> float:
        return abs(self.deriv_rate - self.model_deriv_rate) / abs(self.model_deriv_rate)

    @property
    def residual_factor(self) -> float:
        """rms of pure_exp over rms of linear_times_exp."""
        return self.rms_pure / max(self.rms_lte, 1e-300)


def _lsq(z, y):
    A = np.stack([np.ones_like(z), z], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    r = y - A @ coef
    return float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(r * r)))


def fit_decay(z: np.ndarray, W: np.ndarray, eig: np.ndarray, side: str, model: str = "pure_exp",
              Wz: Optional[np.ndarray] = None, lo: float = WINDOW_LO, hi: float = WINDOW_HI,
              min_nodes: int = MIN_NODES, zmask: Optional[np.ndarray] = None) -> DecayFit:
    """Regress the t-averaged log of ``W / eig`` against z on one side.

    ``W`` has shape (M, n) with the decaying quantity, ``eig`` shape (M,) the periodic
    modulation.  Both models are fitted; ``model`` names the reported one.
    ``Wz`` (optional) is the z-derivative of ``W`` used for the log-derivative check.
    """
    if side not in ("plus", "minus"):
        raise PreconditionError(f"side must be 'plus' or 'minus', got {side!r}")
    z = np.asarray(z, dtype=float)
    W = np.atleast_2d(np.asarray(W, dtype=float))
    eig = np.atleast_1d(np.asarray(eig, dtype=float)).reshape(-1, 1)
    pos = np.all(W > 0, axis=0)
    sel = pos & ((z > 0) if side == "plus" else (z < 0))
    if zmask is not None:
        sel &= zmask
    y = np.full(z.shape, -np.inf)
    y[sel] = np.mean(np.log(W[:, sel] / eig), axis=0)
    amp = np.exp(y)
    sel &= (amp >= lo) & (amp <= hi)
    n = int(sel.sum())
    if n < min_nodes:
        raise InsufficientTailError(
            f"{side} tail window has {n} nodes (< {min_nodes}); enlarge the domain L")
    zs, ys = z[sel], y[sel]
    a_p, r_p, s_p = _lsq(zs, ys)
    a_l, r_l, s_l = _lsq(zs, ys - np.log(np.abs(zs)))
    deriv = model_deriv = float("nan")
    rate = r_p if model == "pure_exp" else r_l
    if Wz is not None:
        ratio = np.asarray(Wz)[:, sel] / W[:, sel]
        deriv = float(np.mean(ratio))
        model_deriv = rate if model == "pure_exp" else float(np.mean(r_l + 1.0 / zs))
    if model == "pure_exp":
        fit = (r_p, np.exp(a_p), s_p, r_l, np.exp(a_l))
    elif model == "linear_times_exp":
        fit = (r_l, np.exp(a_l), s_l, r_p, np.exp(a_p))
    else:
        raise PreconditionError(f"unknown model {model!r}")
    preferred = "pure_exp" if s_p <= s_l else "linear_times_exp"
    return DecayFit(side, "", model, fit[0], float(fit[1]), fit[2], (float(zs.min()), float(zs.max())),
                    rms_pure=s_p, rms_lte=s_l, preferred=preferred, alt_rate=fit[3],
                    alt_amplitude=float(fit[4]), deriv_rate=deriv, model_deriv_rate=model_deriv,
                    n_nodes=n)


def case_table(spec: SpectralPack, side: str, component: str):
    """``(case, predicted rate, eigenfunction label, model)`` resolved from the exponent ordering."""
    if side == "plus":
        if component == "Q":
            return "always", spec.nu2, "phi2", "pure_exp"
        case = spec.plus_case
        if case == "regular":
            return case, spec.nu2, "tilde_phi1", "pure_exp"
        if case == "degenerate":
            return case, spec.nu1, "phi1", "linear_times_exp"
        return case, spec.nu1, "phi1", "pure_exp"
    if component == "P":
        return "always", spec.nu3, "psi1", "pure_exp"
    case = spec.minus_case
    if case == "regular":
        return case, spec.nu3, "tilde_psi2", "pure_exp"
    if case == "degenerate":
        return case, spec.nu4, "psi2", "linear_times_exp"
    return case, spec.nu4, "psi2", "pure_exp"


def decaying_quantity(front: FrontProfile, side: str, component: str):
    """``(W, Wz)``: P, Q toward minus infinity, 1-P, 1-Q toward plus infinity."""
    W = front.P if component == "P" else front.Q
    Wz = front.Pz if component == "P" else front.Qz
    if side == "plus":
        return 1.0 - W, -Wz
    return W, Wz


def fit_tail(front: FrontProfile, spec: SpectralPack, side: str, component: str,
             model: Optional[str] = None, margin: float = 10.0, **kw) -> DecayFit:
    case, pred, label, case_model = case_table(spec, side, component)
    eigfn = getattr(spec, label)
    if eigfn is None:
        raise PreconditionError(f"eigenfunction {label} unavailable in this regime")
    W, Wz = decaying_quantity(front, side, component)
    fit = fit_decay(front.zgrid, W, eigfn(front.tgrid), side, model or case_model, Wz=Wz,
                    zmask=front.window(margin), **kw)
    from dataclasses import replace
    return replace(fit, component=component, predicted_rate=float(pred),
                   predicted_eigenfunction=label, case=case)


@dataclass(frozen=True)
class DecayReport:
    fits: dict
    tol_rel: float
    tol_deriv: float
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def rows(self):
        for (side, comp), f in self.fits.items():
            amp = f.amplitude
            yield (comp, side, f.case, f.predicted_rate, f.rate, f.rel_error, f.model, amp,
                   f.rms_residual, f.deriv_rel_error)


def verify_decay_theorems(front: FrontProfile, spec: SpectralPack, tol_rel: float = 0.05,
                          tol_deriv: float = 0.02) -> DecayReport:
    fits, failures = {}, []
    for side in ("plus", "minus"):
        for comp in ("P", "Q"):
            key = (side, comp)
            try:
                f = fit_tail(front, spec, side, comp)
            except (InsufficientTailError, PreconditionError) as exc:
                failures.append(f"{side}/{comp}: {exc}")
                continue
            fits[key] = f
            if f.rel_error > tol_rel:
                failures.append(f"{side}/{comp}: rate {f.rate:.6g} vs {f.predicted_rate:.6g}")
            if not f.deriv_rel_error <= tol_deriv:
                failures.append(f"{side}/{comp}: log-derivative {f.deriv_rate:.6g} vs {f.model_deriv_rate:.6g}")
    return DecayReport(fits, tol_rel, tol_deriv, failures)


# --------------------------------------------------------------------------
# two-sided exponential bounds

@dataclass(frozen=True)
class BoundReport:
    epsilon: tuple
    exponents: dict
    constants: dict
    violations: int
    far_end_flags: list
    passed: bool


def perturbed_at_fraction(coeffs: CoefficientSet, orbit, spec: SpectralPack, frac: float = 0.1):
    """``(plus, minus)`` perturbed exponents with epsilon at ``frac`` of each side's admissible bound."""
    from .spectral import perturbed_exponents
    probe = perturbed_exponents(coeffs, orbit, spec.kappas, spec.c, spec.d, 1e-12)
    plus = perturbed_exponents(coeffs, orbit, spec.kappas, spec.c, spec.d,
                               frac * probe.eps_max_plus, side="plus")
    minus = perturbed_exponents(coeffs, orbit, spec.kappas, spec.c, spec.d,
                                frac * probe.eps_max_minus, side="minus")
    return plus, minus


def lemma_exponents(spec: SpectralPack, pert) -> dict:
    """Admissible choices for the auxiliary exponents: midpoints of their allowed intervals.

    ``pert`` is one PerturbedExponents or a ``(plus, minus)`` pair.
    """
    n1, n2, n3, n4 = spec.nus
    pp, pm = pert if isinstance(pert, tuple) else (pert, pert)
    out = {}
    pert = pp
    if pert.nu2_eps_plus is not None:
        out["nu1_plus"] = 0.5 * max(n1, pert.nu2_eps_plus)
        out["nu1_minus"] = 1.1 * n1
        out["nu2_eps_plus"] = pert.nu2_eps_plus
        out["nu2_eps_minus"] = pert.nu2_eps_minus
    pert = pm
    if pert.nu3_eps_plus is not None:
        out["nu4_minus"] = 0.5 * min(n4, pert.nu3_eps_plus)
        out["nu4_plus"] = 1.1 * n4
        out["nu3_eps_plus"] = pert.nu3_eps_plus
        out["nu3_eps_minus"] = pert.nu3_eps_minus
    return out


def _extreme(z, W, rate, kind, floor):
    """sup or inf over the grid of W e^{-rate z}; flags an extremum at the far end."""
    good = np.all(W > floor, axis=0)
    if not np.any(good):
        return float("nan"), True
    zz = z[good]
    r = W[:, good] * np.exp(-rate * zz)
    col = r.max(axis=0) if kind == "sup" else r.min(axis=0)
    i = int(np.argmax(col) if kind == "sup" else np.argmin(col))
    far = int(np.argmax(np.abs(zz)))
    at_far = (i == far) and zz.size > 1
    return float(col[i]), bool(at_far)


def verify_apriori_bounds(front: FrontProfile, spec: SpectralPack, pert,
                          margin: float = 10.0,
                          floor: float = 1e-10) -> BoundReport:
    ex = lemma_exponents(spec, pert)
    z = front.zgrid
    win = front.window(margin)
    plus, minus = win & (z >= 0), win & (z <= 0)
    Pzz, Qzz, _, _ = front.derivatives()
    consts, flags = {}, []

    def put(name, z_sel, W, rate, kind):
        val, far = _extreme(z[z_sel], W[:, z_sel], rate, kind, floor)
        consts[name] = val
        if far:
            flags.append(name)

    if "nu1_plus" in ex:
        U, V = 1 - front.P, 1 - front.Q
        put("K1", plus, U, ex["nu1_minus"], "inf")
        put("K1'", plus, U, ex["nu1_plus"], "sup")
        put("K2", plus, V, ex["nu2_eps_minus"], "inf")
        put("K2'", plus, V, ex["nu2_eps_plus"], "sup")
        sP = U + np.abs(front.Pz) + np.abs(Pzz)
        sQ = V + np.abs(front.Qz) + np.abs(Qzz)
        put("C2_P", plus, sP, ex["nu1_plus"], "sup")
        put("C2_Q", plus, sQ, ex["nu1_plus"], "sup")
        consts["C2"] = max(consts.pop("C2_P"), consts.pop("C2_Q"))
    if "nu4_minus" in ex:
        put("K3", minus, front.P, ex["nu3_eps_minus"], "inf")
        put("K3'", minus, front.P, ex["nu3_eps_plus"], "sup")
        put("K4", minus, front.Q, ex["nu4_plus"], "inf")
        put("K4'", minus, front.Q, ex["nu4_minus"], "sup")
        sP = front.P + np.abs(front.Pz) + np.abs(Pzz)
        sQ = front.Q + np.abs(front.Qz) + np.abs(Qzz)
        put("C1_P", minus, sP, ex["nu4_minus"], "sup")
        put("C1_Q", minus, sQ, ex["nu4_minus"], "sup")
        consts["C1"] = max(consts.pop("C1_P"), consts.pop("C1_Q"))
    flags = [f.replace("_P", "").replace("_Q", "") for f in flags]
    finite = all(np.isfinite(v) and v > 0 for v in consts.values())
    violations = sum(1 for v in consts.values() if not (np.isfinite(v) and v > 0)) + len(flags)
    pp, pm = pert if isinstance(pert, tuple) else (pert, pert)
    return BoundReport((pp.epsilon, pm.epsilon), ex, consts, violations,
                       flags, bool(finite and not flags))


# --------------------------------------------------------------------------
# constants feeding the supersolution

@dataclass(frozen=True)
class FrontConstants:
    M: float
    N: float
    M1: float
    m1: float
    delta1: float
    delta2: float
    gamma1: float
    gamma2: float
    eta0: float = float("nan")
    eta1: float = float("nan")
    nu3: float = float("nan")


def estimate_front_constants(front: FrontProfile, nu3: float, margin: float = 10.0,
                             floor: float = 1e-10, safety: float = SAFETY) -> FrontConstants:
    """Extremal grid ratios, inflated (upper) or deflated (lower) by ``safety``."""
    from .front import condition_ratios
    z = front.zgrid
    win = front.window(margin)
    up, dn = 1 + safety, 1 - safety
    out = {}
    neg = win & (z <= 0)
    P, Q, Pz, Qz = front.P[:, neg], front.Q[:, neg], front.Pz[:, neg], front.Qz[:, neg]
    ok = np.all((P > floor) & (Q > floor), axis=0)
    P, Q, Pz, Qz, zn = P[:, ok], Q[:, ok], Pz[:, ok], Qz[:, ok], z[neg][ok]
    pos = win & (z >= 0)
    U, V, Pzp, Qzp = 1 - front.P[:, pos], 1 - front.Q[:, pos], front.Pz[:, pos], front.Qz[:, pos]
    okp = np.all((U > floor) & (V > floor), axis=0)
    U, V, Pzp, Qzp = U[:, okp], V[:, okp], Pzp[:, okp], Qzp[:, okp]
    if P.size == 0:
        raise NumericalError("no usable nodes on the minus side for the front constants")
    scaled = P * np.exp(-nu3 * zn)
    out["M"] = float((Q / P).max()) * up
    out["M1"] = float(scaled.max()) * up
    out["m1"] = float(scaled.min()) * dn
    dP, dQ = Pz / P, Qz / Q
    d1 = float(dP.min())
    g1 = float(dQ.min())
    if U.size:
        out["N"] = float((V / U).max()) * up
        d1 = min(d1, float((Pzp / U).min()))
        g1 = min(g1, float((Qzp / V).min()))
    else:
        out["N"] = float("nan")
    out["delta1"], out["delta2"] = d1 * dn, float(dP.max()) * up
    out["gamma1"], out["gamma2"] = g1 * dn, float(dQ.max()) * up
    for k, v in out.items():
        if k == "N" and not U.size:
            continue
        if not (np.isfinite(v) and v > 0):
            raise NumericalError(f"front constant {k} is not finite and positive ({v})")
    eta0, eta1 = condition_ratios(front)
    return FrontConstants(**out, eta0=eta0, eta1=eta1, nu3=float(nu3))


@dataclass(frozen=True)
class KBounds:
    K1: float
    K2: float
    K: float


def k_bounds_from(cst: FrontConstants, P0: np.ndarray, Q0: np.ndarray, C1_minus: float,
                  C2_plus: float, d: float) -> KBounds:
    """Closed-form maxima over t of the two ratio-bound constants."""
    P0, Q0 = np.asarray(P0, float), np.asarray(Q0, float)
    if np.any(1 - P0 <= 0) or np.any(1 - Q0 <= 0):
        raise PreconditionError("P(t,0) or Q(t,0) reaches 1: phase normalization is broken")
    a = 2 * cst.delta2 / (1 - P0)
    t1 = a + 2 * C2_plus * cst.M / ((1 - P0) * cst.delta1)
    t2 = a + C2_plus * (cst.M * cst.N + 1) / ((1 - P0) * cst.delta1)
    K1 = cst.M1 * float(max(t1.max(), t2.max()))
    K2 = cst.M * cst.M1 * float((2 * d * cst.gamma2 / (1 - Q0) + C1_minus / cst.gamma1).max())
    return KBounds(K1, K2, max(K1, K2))


def k_bounds(cst: FrontConstants, coeffs: CoefficientSet, orbit, front: FrontProfile) -> KBounds:
    pack = ReactionPack(coeffs, orbit)
    zcol = np.array([0.0])
    P0 = np.array([front.evaluate(t, zcol, "P")[0] for t in front.tgrid])
    Q0 = np.array([front.evaluate(t, zcol, "Q")[0] for t in front.tgrid])
    return k_bounds_from(cst, P0, Q0, pack.C.max_on(), pack.B.max_on(), coeffs.d)


@dataclass(frozen=True)
class RatioReport:
    j1: float
    j2: float
    max_ratio_H: float
    max_ratio_Ht: float
    bound_H: float
    bound_Ht: float
    worst_H: tuple
    worst_Ht: tuple
    excluded: int
    passed: bool


def resolved_band(front: FrontProfile, margin: float = 10.0, floor: float = 1e-10):
    """Widest z-interval inside the window where no component is within ``floor`` of 0 or 1."""
    w = front.window(margin)
    lo = np.minimum(np.minimum(front.P, front.Q), 1 - np.maximum(front.P, front.Q)).min(axis=0)
    ok = w & (lo > floor)
    if not np.any(ok):
        raise NumericalError("front has no resolved nodes above the floor")
    return float(front.zgrid[ok][0]), float(front.zgrid[ok][-1])


def verify_ratio_bounds(front: FrontProfile, kb: KBounds, j1: float, j2: float, nu3: float,
                        pack: ReactionPack, margin: float = 10.0, nx: int = 801,
                        t_stride: int = 1, floor: float = 1e-10) -> RatioReport:
    """Scan ``H / A`` and ``H~ / B`` over a (t, x) grid against ``K_i exp(nu3 j1)``.

    Both front arguments are kept inside the resolved band where P, Q, 1-P, 1-Q all
    exceed ``floor``; beyond it the derivative samples are round-off.
    """
    if not (j2 <= j1 <= 0):
        raise PreconditionError("shifts must satisfy j2 <= j1 <= 0")
    zlo, zhi = resolved_band(front, margin, floor)
    xlo = max(zlo - j1, j2 - zhi)
    xhi = min(zhi - j1, j2 - zlo)
    x = np.linspace(xlo, xhi, nx)
    z1, z2 = x + j1, -x + j2
    bH, bHt = kb.K1 * np.exp(nu3 * j1), kb.K2 * np.exp(nu3 * j1)
    mH = mHt = -np.inf
    wH = wHt = (np.nan, np.nan)
    excluded = 0
    x0, h = front.zgrid[0], front.h
    for m in range(0, front.M, t_stride):
        t = front.tgrid[m]
        A_, B_, C_, D_ = pack.products(t)
        row = lambda arr, z, lim: interp_points(arr[m], x0, h, z, 4, *lim)  # noqa: E731
        P1, P2 = row(front.P, z1, (0, 1)), row(front.P, z2, (0, 1))
        Q1, Q2 = row(front.Q, z1, (0, 1)), row(front.Q, z2, (0, 1))
        P1z, P2z = row(front.Pz, z1, (0, 0)), row(front.Pz, z2, (0, 0))
        Q1z, Q2z = row(front.Qz, z1, (0, 0)), row(front.Qz, z2, (0, 0))
        H = 2 * P1z * P2z + B_ * (P1 * Q2 * (1 - P2) * (1 - Q1) + P2 * Q1 * (1 - P1) * (1 - Q2))
        A = (1 - P2) * P1z + (1 - P1) * P2z
        Ht = 2 * pack.d * Q1z * Q2z + C_ * Q1 * Q2 * (1 - Q1) * (1 - Q2)
        B = (1 - Q2) * Q1z + (1 - Q1) * Q2z
        for num, den, which in ((H, A, 0), (Ht, B, 1)):
            ok = den > 1e-300
            excluded += int((~ok).sum())
            if not np.any(ok):
                continue
            r = num[ok] / den[ok]
            i = int(np.argmax(r))
            if which == 0 and r[i] > mH:
                mH, wH = float(r[i]), (float(t), float(x[ok][i]))
            if which == 1 and r[i] > mHt:
                mHt, wHt = float(r[i]), (float(t), float(x[ok][i]))
    passed = bool(mH <= bH and mHt <= bHt)
    return RatioReport(float(j1), float(j2), mH, mHt, float(bH), float(bHt), wH, wHt, excluded, passed)


# --------------------------------------------------------------------------
# manufacturing the equal-exponent case

@dataclass(frozen=True)
class DegenerateTuning:
    d: float
    front: FrontProfile
    spectral: SpectralPack
    history: tuple


def tune_degenerate_d(coeffs: CoefficientSet, grid_factory, d0: float, d1: float,
                      tol: float = 1e-3, max_iter: int = 12,
                      opts: FrontOptions = FrontOptions()) -> DegenerateTuning:
    """Secant iteration on d driving nu3(c(d)) - nu4(c(d), d) to zero.

    ``grid_factory(d)`` returns the grid for a given diffusivity (dt may depend on d).
    Stops when |nu3 - nu4| <= tol |nu4|.
    """
    orbit = compute_orbits(coeffs.replace(d=d0))
    hist = []
    cache = {}

    def F(d):
        cs = coeffs.replace(d=d)
        o = compute_orbits(cs)
        init = cache.get("front")
        fo = FrontOptions(**{**opts.__dict__, "initial": init,
                             "warmup_periods": opts.warmup_periods if init is None else 10})
        fr = compute_front(cs, o, grid_factory(d), fo)
        cache["front"] = fr
        sp = spectral_pack(cs, o, fr.c)
        val = sp.nu3 - sp.nu4
        hist.append((d, fr.c, sp.nu3, sp.nu4))
        log.info("d = %.8f: c = %.8f, nu3 - nu4 = %.3e", d, fr.c, val)
        return val, fr, sp

    del orbit
    f0, fr0, sp0 = F(d0)
    f1, fr1, sp1 = F(d1)
    for _ in range(max_iter):
        if abs(f1) <= tol * abs(sp1.nu4):
            return DegenerateTuning(d1, fr1, sp1, tuple(hist))
        if f1 == f0:
            break
        d2 = d1 - f1 * (d1 - d0) / (f1 - f0)
        d2 = min(max(d2, 0.5 * d1), 2.0 * d1)
        d0, f0 = d1, f1
        d1 = d2
        f1, fr1, sp1 = F(d1)
    if abs(f1) <= tol * abs(sp1.nu4):
        return DegenerateTuning(d1, fr1, sp1, tuple(hist))
    raise NumericalError(f"degenerate tuning did not reach |nu3 - nu4| <= {tol} |nu4|: {hist[-1]}")
