import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lvfronts.asymptotics import (FrontConstants, InsufficientTailError, estimate_front_constants,
                                  fit_decay, k_bounds_from, perturbed_at_fraction, resolved_band,
                                  verify_apriori_bounds, verify_decay_theorems, verify_ratio_bounds)
from lvfronts.errors import PreconditionError
from lvfronts.front import FrontProfile
from lvfronts.kinetics import ReactionPack

T_SYN = np.linspace(0, 1, 8, endpoint=False)
MOD = 1 + 0.1 * np.cos(2 * np.pi * T_SYN)


def planted(zmax=40.0, h=0.05, linear=False):
    z = np.arange(-round(zmax / h), round(zmax / h) + 1) * h
    base = 0.6 * np.abs(z) if linear else 2.0
    W = np.outer(MOD, base * np.exp(-0.8 * z))
    return z, W


# ---------------------------------------------------------------- planted tails

def test_pure_exponential_recovered():
    z, W = planted()
    f = fit_decay(z, W, MOD, "plus")
    assert f.rate == pytest.approx(-0.8, abs=1e-6)
    assert f.amplitude == pytest.approx(2.0, abs=1e-5)
    assert f.preferred == "pure_exp"
    assert f.n_nodes >= 20


def test_linear_times_exponential_recovered():
    z, W = planted(linear=True)
    f = fit_decay(z, W, MOD, "plus", model="linear_times_exp")
    assert f.rate == pytest.approx(-0.8, abs=1e-6)
    assert f.amplitude == pytest.approx(0.6, abs=1e-4)
    assert f.preferred == "linear_times_exp"
    assert f.residual_factor >= 5


def test_log_derivative_check_on_planted_tail():
    z, W = planted()
    f = fit_decay(z, W, MOD, "plus", Wz=-0.8 * W)
    assert f.deriv_rate == pytest.approx(-0.8, abs=1e-12)
    assert f.deriv_rel_error <= 1e-6


@pytest.mark.parametrize("kw", [dict(zmax=10.0), dict(zmax=40.0, h=2.0)], ids=["short", "coarse"])
def test_insufficient_tail(kw):
    z, W = planted(**kw)
    with pytest.raises(InsufficientTailError):
        fit_decay(z, W, MOD, "plus")


def test_fit_rejects_bad_side_and_model():
    z, W = planted()
    with pytest.raises(PreconditionError):
        fit_decay(z, W, MOD, "left")
    with pytest.raises(PreconditionError):
        fit_decay(z, W, MOD, "plus", model="power")


@given(rate=st.floats(0.3, 2.0), amp=st.floats(0.1, 10.0))
@settings(max_examples=30, deadline=None)
def test_minus_side_fit_recovers_planted_rate(rate, amp):
    z = np.arange(-1200, 1201) * 0.05
    W = np.outer(MOD, amp * np.exp(rate * z))
    f = fit_decay(z, W, MOD, "minus")
    assert f.rate == pytest.approx(rate, rel=1e-9)
    assert f.amplitude == pytest.approx(amp, rel=1e-8)


# ---------------------------------------------------------------- ratio constants

def consts(**kw):
    base = dict(M=1.0, N=3.0, M1=2.0, m1=0.5, delta1=2.0, delta2=1.0, gamma1=1.0, gamma2=0.25)
    base.update(kw)
    return FrontConstants(**base)


def test_k_bounds_arithmetic():
    half = np.full(5, 0.5)
    kb = k_bounds_from(consts(), half, half, C1_minus=1.5, C2_plus=0.0, d=1.0)
    assert (kb.K1, kb.K2, kb.K) == pytest.approx((8.0, 5.0, 8.0), rel=1e-14)
    kb = k_bounds_from(consts(), half, half, C1_minus=1.5, C2_plus=1.0, d=1.0)
    assert kb.K1 == pytest.approx(16.0, rel=1e-14)


@given(m1=st.floats(0.1, 10.0), c1=st.floats(0.0, 5.0), c2=st.floats(0.0, 5.0))
@settings(max_examples=30, deadline=None)
def test_k_bounds_linear_in_M1(m1, c1, c2):
    p0 = np.array([0.3, 0.5, 0.6])
    a = k_bounds_from(consts(M1=m1), p0, p0, c1, c2, 1.3)
    b = k_bounds_from(consts(M1=2 * m1), p0, p0, c1, c2, 1.3)
    assert b.K == pytest.approx(2 * a.K, rel=1e-12)


def test_k_bounds_reject_broken_phase():
    with pytest.raises(PreconditionError):
        k_bounds_from(consts(), np.array([0.5, 1.0]), np.array([0.5, 0.5]), 1.0, 1.0, 1.0)


def synthetic_front():
    """P = e^{0.8z}, Q = P/2 on z <= 0 and 1-P = e^{-0.8z}, 1-Q = (1-P)/2 on z > 0."""
    z = np.arange(-600, 601) * 0.05
    neg = z <= 0
    P = np.where(neg, np.exp(0.8 * z), 1 - np.exp(-0.8 * z))
    Q = np.where(neg, 0.5 * np.exp(0.8 * z), 1 - 0.5 * np.exp(-0.8 * z))
    Pz = 0.8 * np.exp(-0.8 * np.abs(z))
    Qz = np.where(neg, 0.4 * np.exp(0.8 * z), 0.4 * np.exp(-0.8 * z))
    rows = lambda a: np.tile(a, (4, 1))  # noqa: E731
    return FrontProfile(z, np.arange(4) / 4, rows(P), rows(Q), rows(Pz), rows(Qz),
                        -0.5, 0.0, 1.0, 1.0)


def test_front_constants_on_synthetic_profile():
    c = estimate_front_constants(synthetic_front(), 0.8)
    # plus-side ratios go through 1 - (1 - e^{-0.8z}), which keeps ~9 digits at the window edge
    plus = 1e-8
    assert c.M == pytest.approx(0.525, rel=1e-12)
    assert c.N == pytest.approx(0.525, rel=plus)
    assert c.M1 == pytest.approx(1.05, rel=1e-12)
    assert c.m1 == pytest.approx(0.95, rel=1e-12)
    assert c.delta1 == pytest.approx(0.76, rel=plus)
    assert c.delta2 == pytest.approx(0.84, rel=1e-12)
    assert c.gamma1 == pytest.approx(0.76, rel=plus)
    assert c.gamma2 == pytest.approx(0.84, rel=1e-12)


# ---------------------------------------------------------------- PS-A front

def test_decay_rates_psa(psa_front, psa_spectral):
    rep = verify_decay_theorems(psa_front, psa_spectral)
    assert rep.passed, rep.failures
    assert len(rep.fits) == 4
    for f in rep.fits.values():
        assert f.rel_error <= 0.05


def test_tail_bounds_at_tenth_of_admissible_eps(psa, psa_front, psa_spectral):
    cs, orb, _ = psa
    pert = perturbed_at_fraction(cs, orb, psa_spectral, 0.1)
    rep = verify_apriori_bounds(psa_front, psa_spectral, pert)
    assert rep.passed, (rep.constants, rep.far_end_flags)
    assert all(np.isfinite(v) and v > 0 for v in rep.constants.values())


def test_constants_psa(psa_kbounds):
    cst, kb = psa_kbounds
    assert 0 < cst.m1 < cst.M1
    assert 0 < cst.delta1 <= cst.delta2 and 0 < cst.gamma1 <= cst.gamma2
    assert kb.K == max(kb.K1, kb.K2) > 0


def test_resolved_band_contains_interface(psa_front):
    lo, hi = resolved_band(psa_front)
    assert lo < 0 < hi


@pytest.mark.parametrize("j", [(0.0, 0.0), (-2.0, -5.0)])
def test_ratio_bounds_hold(psa, psa_front, psa_spectral, psa_kbounds, j):
    _, kb = psa_kbounds
    _, _, pack = psa
    rep = verify_ratio_bounds(psa_front, kb, j[0], j[1], psa_spectral.nu3, pack, t_stride=50)
    assert rep.passed and rep.max_ratio_H <= rep.bound_H and rep.max_ratio_Ht <= rep.bound_Ht


def test_ratio_bounds_reject_bad_shift_order(psa, psa_front, psa_spectral, psa_kbounds):
    _, kb = psa_kbounds
    with pytest.raises(PreconditionError):
        verify_ratio_bounds(psa_front, kb, -5.0, -2.0, psa_spectral.nu3, ReactionPack(*psa[:2]))
