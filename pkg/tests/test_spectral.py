import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy.integrate import solve_ivp

from conftest import ps_a, ps_b
from lvfronts.errors import AssumptionError, PreconditionError, ZeroSpeedError
from lvfronts.kinetics import CoefficientSet, ReactionPack, check_assumptions, compute_orbits
from lvfronts.spectral import (boundary_eigenpairs, classify_minus, classify_plus, compute_kappas,
                               compute_nus, degenerate_amplitudes, eigenfunctions,
                               forced_residual, periodicity_defect, perturbed_exponents,
                               quadratic_residuals, spectral_pack, theta_plus,
                               tilde_eigenfunctions)
from lvfronts._trig import TrigSeries

C_TEST = -0.5


def ode_samples(rate_fn, forcing_fn, T, t_eval, w0):
    sol = solve_ivp(lambda t, w: rate_fn(t) * w + forcing_fn(t), (0, T), [w0],
                    method="DOP853", rtol=1e-13, atol=1e-15, t_eval=t_eval)
    return sol.y[0]


def periodic_shoot(rate_fn, forcing_fn, T, t_eval):
    """Periodic solution of a scalar linear ODE from two shots of the period map."""
    end = lambda w0: ode_samples(rate_fn, forcing_fn, T, [T], w0)[0]  # noqa: E731
    beta = end(0.0)
    alpha = end(1.0) - beta
    w0 = beta / (1.0 - alpha)
    return ode_samples(rate_fn, forcing_fn, T, t_eval, w0)


@pytest.mark.parametrize("cs, expected", [
    (ps_a(), (1.0, 0.8, 0.3, 1.0)),
    (ps_b(), (1.0, 0.8, 0.3, 1.0)),
    (ps_a(a2=2.2), (1.0, 1.2, 0.3, 1.0)),
])
def test_kappas(cs, expected):
    assert compute_kappas(cs, compute_orbits(cs)) == pytest.approx(expected, abs=1e-10)


def test_kappas_reject_assumption_violation():
    cs = ps_a(b1=0.9)
    with pytest.raises(AssumptionError):
        compute_kappas(cs, compute_orbits(cs))


def test_nus_closed_form():
    nus = compute_nus((1.0, 0.8, 0.3, 1.0), C_TEST, 1.0)
    assert nus[0] == pytest.approx((0.5 - math.sqrt(4.25)) / 2, abs=1e-15)
    assert nus[0] == pytest.approx(-0.780776, abs=1e-6)
    assert nus[1] == pytest.approx((0.5 - math.sqrt(3.45)) / 2, abs=1e-15)
    assert nus[2] == pytest.approx((0.5 + math.sqrt(1.45)) / 2, abs=1e-15)
    assert nus[3] == pytest.approx((0.5 + math.sqrt(4.25)) / 2, abs=1e-15)
    assert nus[0] < nus[1]
    assert classify_plus(nus) == "regular" and classify_minus(nus) == "regular"


def test_nus_reject_zero_speed():
    with pytest.raises(ZeroSpeedError):
        compute_nus((1.0, 0.8, 0.3, 1.0), 1e-8, 1.0)


kappa = st.floats(0.05, 3.0)


@given(k=st.tuples(kappa, kappa, kappa, kappa), c=st.floats(-2.0, 2.0), d=st.floats(0.2, 5.0))
@settings(max_examples=100, deadline=None)
def test_nus_solve_quadratics_with_sign_pattern(k, c, d):
    assume(abs(c) > 1e-3)
    nus = compute_nus(k, c, d)
    assert max(abs(r) for r in quadratic_residuals(k, nus, c, d)) <= 1e-12
    assert nus[0] < 0 and nus[1] < 0 and nus[2] > 0 and nus[3] > 0


@given(k1=kappa, k2=kappa, k3=kappa, k4=kappa, c=st.floats(-2.0, 2.0))
@settings(max_examples=100, deadline=None)
def test_root_ordering_follows_kappa_ordering(k1, k2, k3, k4, c):
    assume(abs(c) > 1e-3 and abs(k1 - k2) > 1e-9 and abs(k3 - k4) > 1e-9)
    n1, n2, n3, n4 = compute_nus((k1, k2, k3, k4), c, 1.0)
    assert (k1 > k2) == (n1 < n2)
    assert (k3 < k4) == (n3 < n4)


@given(b1=st.floats(1.01, 3.0), a2=st.floats(1.01, 3.0), r2=st.floats(0.5, 2.0))
@settings(max_examples=60, deadline=None)
def test_constant_sets_passing_assumptions_are_regular_on_plus_side(b1, a2, r2):
    cs = CoefficientSet.constant(r1=1.0, r2=r2, a1=1.0, b2=1.0, b1=b1, a2=a2)
    assume(check_assumptions(cs).ok)
    k = compute_kappas(cs, compute_orbits(cs))
    assert k[1] < k[0]
    nus = compute_nus(k, -0.3, 1.0)
    assert nus[0] < nus[1]


def test_ps_a_eigenfunctions_are_one():
    cs = ps_a()
    for fn in eigenfunctions(cs, compute_orbits(cs)):
        assert np.max(np.abs(fn.sample(64) - 1.0)) < 1e-14


def test_ps_b_phi1_matches_ode_oracle():
    cs = ps_b()
    orb = compute_orbits(cs)
    pack = ReactionPack(cs, orb)
    k1 = compute_kappas(cs, orb)[0]
    phi1 = eigenfunctions(cs, orb)[0]
    t = np.linspace(0, 1, 65)
    ref = ode_samples(lambda s: k1 - pack.A(s), lambda s: 0.0, 1.0, t, 1.0)
    assert np.ptp(phi1(t)) > 1e-2
    assert np.max(np.abs(phi1(t) - ref)) < 1e-10


@pytest.mark.parametrize("cs", [ps_a(), ps_b()], ids=["PS-A", "PS-B"])
def test_eigenfunctions_periodic_positive_and_solve_odes(cs):
    orb = compute_orbits(cs)
    pack = ReactionPack(cs, orb)
    k1, k2, k3, k4 = compute_kappas(cs, orb)
    A, B, C, D = pack.A, pack.B, pack.C, pack.D
    rates = (k1 - A, k2 - (D - C), A - B + k3, k4 - C)
    zero = TrigSeries.constant(0.0, cs.T)
    for fn, rate in zip(eigenfunctions(cs, orb), rates):
        assert fn(0.0) == pytest.approx(1.0, abs=1e-14)
        assert periodicity_defect(fn) <= 1e-10
        assert fn.min_on() > 0
        assert forced_residual(fn, 0.0, -rate, zero) <= 1e-8


def test_tilde_eigenfunctions_ps_a_closed_form():
    cs = ps_a()
    orb = compute_orbits(cs)
    nus = compute_nus(compute_kappas(cs, orb), C_TEST, 1.0)
    (tphi, lphi), (tpsi, lpsi) = tilde_eigenfunctions(cs, orb, nus, C_TEST, 1.0)
    assert lphi == "valid" and lpsi == "valid"
    assert np.max(np.abs(tphi.sample(32) - 6.5)) < 1e-12
    assert np.max(np.abs(tpsi.sample(32) - 18.0 / 7.0)) < 1e-12


def test_tilde_phi1_absent_outside_regime():
    cs = ps_a()
    orb = compute_orbits(cs)
    # nu1 > nu2 requires kappa2 > kappa1 at d = 1: force it through the exponents directly
    nus = (-0.5, -0.9, 0.6, 1.2)
    (tphi, lphi), _ = tilde_eigenfunctions(cs, orb, nus, C_TEST, 1.0)
    assert tphi is None and lphi.startswith("absent")


def test_tilde_functions_ps_b_match_shooting(psb, psb_front60):
    cs, orb, pack = psb
    c = psb_front60.c
    sp = spectral_pack(cs, orb, c)
    k = compute_kappas(cs, orb)
    nu2 = (-c - math.sqrt(c * c + 4 * cs.d * k[1])) / (2 * cs.d)
    nu3 = (-c + math.sqrt(c * c + 4 * k[2])) / 2
    u1 = nu2 * nu2 + c * nu2
    u2 = cs.d * nu3 * nu3 + c * nu3
    t = np.linspace(0, 1, 41)
    ref1 = periodic_shoot(lambda s: u1 - pack.A(s), lambda s: pack.B(s) * sp.phi2(s), 1.0, t)
    ref2 = periodic_shoot(lambda s: u2 - pack.C(s), lambda s: pack.D(s) * sp.psi1(s), 1.0, t)
    assert np.max(np.abs(sp.tilde_phi1(t) - ref1)) < 1e-8
    assert np.max(np.abs(sp.tilde_psi2(t) - ref2)) < 1e-8
    assert forced_residual(sp.tilde_phi1, u1, pack.A, pack.B * sp.phi2) <= 1e-8
    assert forced_residual(sp.tilde_psi2, u2, pack.C, pack.D * sp.psi1) <= 1e-8


def test_theta_plus_arithmetic():
    one = TrigSeries.constant(1.0, 1.0)
    B = TrigSeries.constant(1.3, 1.0)
    assert theta_plus(1.0, -0.8, -0.5, B, one, one) == pytest.approx(1.3 / 2.1)


@given(k1=st.floats(0.01, 5.0), kap=st.floats(0.05, 3.0), c=st.floats(-2.0, 2.0))
@settings(max_examples=50, deadline=None)
def test_theta_plus_is_positive(k1, kap, c):
    nu1 = (-c - math.sqrt(c * c + 4 * kap)) / 2
    one = TrigSeries.constant(1.0, 1.0)
    assert theta_plus(k1, nu1, c, TrigSeries.constant(1.3, 1.0), one, one) > 0


def test_degenerate_amplitudes_absent_in_regular_case():
    cs = ps_a()
    orb = compute_orbits(cs)
    nus = compute_nus(compute_kappas(cs, orb), C_TEST, 1.0)
    assert degenerate_amplitudes(1.0, nus, C_TEST, cs, orb) == (None, None)


def test_perturbed_exponents_ps_a():
    cs = ps_a()
    orb = compute_orbits(cs)
    k = compute_kappas(cs, orb)
    pe = perturbed_exponents(cs, orb, k, C_TEST, 1.0, 0.1, side="plus")
    assert pe.C1_plus == pytest.approx(1.8)
    assert pe.nu2_eps_plus == pytest.approx((0.5 - math.sqrt(0.25 + 4 * 0.62)) / 2, abs=1e-14)
    assert pe.nu2_eps_plus == pytest.approx(-0.577, abs=2e-3)
    assert pe.eps_max_plus == pytest.approx(0.8 / 1.8)
    with pytest.raises(PreconditionError):
        perturbed_exponents(cs, orb, k, C_TEST, 1.0, 0.5, side="plus")


def test_perturbed_exponents_limit_and_monotonicity():
    cs = ps_b()
    orb = compute_orbits(cs)
    k = compute_kappas(cs, orb)
    nus = compute_nus(k, C_TEST, 1.0)
    pe = perturbed_exponents(cs, orb, k, C_TEST, 1.0, 1e-7)
    for got, want in ((pe.nu2_eps_plus, nus[1]), (pe.nu2_eps_minus, nus[1]),
                      (pe.nu3_eps_plus, nus[2]), (pe.nu3_eps_minus, nus[2])):
        assert abs(got - want) < 1e-6
    prev = None
    for eps in (0.01, 0.05, 0.1, 0.2):
        cur = perturbed_exponents(cs, orb, k, C_TEST, 1.0, eps)
        if prev is not None:
            assert cur.nu2_eps_plus > prev.nu2_eps_plus and cur.nu2_eps_minus < prev.nu2_eps_minus
            assert cur.nu3_eps_plus < prev.nu3_eps_plus and cur.nu3_eps_minus > prev.nu3_eps_minus
        prev = cur


def test_boundary_eigenpairs_ps_a():
    cs = ps_a()
    orb = compute_orbits(cs)
    pack = ReactionPack(cs, orb)
    be = boundary_eigenpairs(cs, orb, pack)
    lv00 = float(pack.l_v(0.0, 0.0, 0.0))
    assert be.lambda0 == pytest.approx(-float(pack.f_u(0.0, 0.0, 0.0)))
    assert be.lambda0 == pytest.approx(0.3)
    assert np.max(np.abs(be.phi0.sample(16) - 1.0)) < 1e-14
    assert np.max(np.abs(be.psi0.sample(16) - 1.8 / (-lv00 - be.lambda0))) < 1e-12
    assert max(be.residuals(pack)) <= 1e-10
    assert periodicity_defect(be.phi0) < 1e-14


def test_boundary_eigenpairs_ps_b():
    cs = ps_b()
    orb = compute_orbits(cs)
    pack = ReactionPack(cs, orb)
    be = boundary_eigenpairs(cs, orb, pack)
    assert be.lambda0 > 0 and be.lambda1 > 0
    assert max(be.residuals(pack)) <= 1e-8
    for fn in (be.phi0, be.psi0, be.phi1b, be.psi1b):
        assert fn.min_on() > 0


def test_spectral_pack_sampled_columns():
    cs = ps_a()
    sp = spectral_pack(cs, compute_orbits(cs), C_TEST)
    cols = sp.sampled(16)
    assert set(cols) == {"t", "phi1", "phi2", "psi1", "psi2", "tilde_phi1", "tilde_psi2"}
    assert sp.plus_case == "regular" and sp.minus_case == "regular"
