import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from conftest import ps_a, ps_b
from lvfronts.errors import InvalidInputError, PreconditionError
from lvfronts.kinetics import (CoefficientSet, PeriodicFn, ReactionPack, check_assumptions,
                               compute_orbits, orbit_residual, periodic_average)


def logistic_oracle(r, a, T, tgrid):
    """Adaptive RK solve of p' = p (r - a p) run until the period map converges."""
    rhs = lambda t, y: y * (r(t) - a(t) * y)  # noqa: E731
    y = 0.5
    for _ in range(200):
        sol = solve_ivp(rhs, (0, T), [y], method="DOP853", rtol=1e-13, atol=1e-15)
        y_new = sol.y[0, -1]
        if abs(y_new - y) < 1e-15:
            break
        y = y_new
    sol = solve_ivp(rhs, (0, T), [y], method="DOP853", rtol=1e-13, atol=1e-15,
                    t_eval=tgrid, dense_output=False)
    return sol.y[0]


def test_periodic_fn_triples_roundtrip():
    f = PeriodicFn.from_triples(1.0, [[2, 0.1, 0.0], [1, 0.0, 0.3]], 1.0)
    assert f.to_triples() == [[1, 0.0, 0.3], [2, 0.1, 0.0]]
    assert f(0.25) == pytest.approx(1.0 + 0.3 - 0.1)


def test_periodic_fn_rejects_bad_input():
    with pytest.raises(InvalidInputError):
        PeriodicFn(float("nan"))
    with pytest.raises(InvalidInputError):
        PeriodicFn.from_triples(1.0, [[0, 1.0, 0.0]], 1.0)
    with pytest.raises(InvalidInputError):
        CoefficientSet.constant(d=-1.0)


@pytest.mark.parametrize("f, expected", [
    (PeriodicFn(1.0, ((0.0, 0.3),)), 1.0),
    (PeriodicFn.constant(2.5), 2.5),
    (np.full(10, 0.7), 0.7),
])
def test_periodic_average(f, expected):
    assert periodic_average(f) == pytest.approx(expected)


def test_assumptions_ps_a_margins():
    rep = check_assumptions(ps_a())
    assert rep.ok
    m = rep.margins
    assert (m["A2_first"], m["A2_second"]) == pytest.approx((0.3, 0.8))
    assert (m["A3_first"], m["A3_second"]) == pytest.approx((0.2, 0.7))


def test_assumptions_a2_violation():
    rep = check_assumptions(ps_a(b1=0.9))
    assert not rep.a2_ok and not rep.ok
    assert rep.margins["A2_first"] == pytest.approx(-0.1)
    assert "A2_first" in rep.failures()


def test_assumptions_ps_b_pass():
    assert check_assumptions(ps_b()).ok


def test_assumptions_a1_failure_reported_not_raised():
    cs = ps_a().replace(a2=PeriodicFn(0.5, ((1.0, 0.0),)))
    rep = check_assumptions(cs)
    assert not rep.a1_ok
    assert rep.margins["A1_positivity"] < 0


def test_constant_orbits_exact():
    orb = compute_orbits(ps_a(r1=2.0, a1=4.0, r2=3.0, b2=1.5))
    assert np.max(np.abs(orb.p - 0.5)) < 1e-14
    assert np.max(np.abs(orb.q - 2.0)) < 1e-14
    assert orbit_residual(compute_orbits(ps_a()), ps_a()) < 1e-12


def test_orbit_needs_positive_mean_growth():
    with pytest.raises(PreconditionError):
        compute_orbits(ps_a(r1=-0.1))
    with pytest.raises(PreconditionError):
        compute_orbits(ps_a(), M=32)


def test_ps_b_orbit_matches_ode_oracle():
    cs = ps_b()
    orb = compute_orbits(cs, 256)
    ref = logistic_oracle(cs.r1, cs.a1, cs.T, orb.tgrid)
    assert np.ptp(orb.p) > 0.05
    assert np.max(np.abs(orb.p - ref)) < 1e-10
    assert np.mean(cs.a1(orb.tgrid) * orb.p) == pytest.approx(1.0, abs=1e-8)


def test_orbit_residual_converges_at_fourth_order():
    cs = ps_b()
    r = [orbit_residual(compute_orbits(cs, M), cs) for M in (64, 128, 256)]
    assert r[2] <= 1e-6
    assert r[0] / r[1] > 12 and r[1] / r[2] > 12


def test_orbit_residual_detects_corruption():
    cs = ps_b()
    orb = compute_orbits(cs)
    p = orb.p.copy()
    p[17] += 0.01
    bad = dataclasses.replace(orb, p=p)
    assert orbit_residual(bad, cs) >= 1e-3 * 256


periodic = st.builds(
    lambda m, a, b: PeriodicFn(m, ((a * m, b * m),)),
    st.floats(0.5, 2.0), st.floats(-0.4, 0.4), st.floats(-0.4, 0.4))


@given(r1=periodic, r2=periodic, a1=periodic, b2=periodic)
@settings(max_examples=20, deadline=None)
def test_orbit_positive_periodic_and_averaged_identity(r1, r2, a1, b2):
    cs = CoefficientSet(1.0, 1.0, r1, r2, a1, PeriodicFn.constant(1.0), PeriodicFn.constant(1.0), b2)
    orb = compute_orbits(cs)
    assert orb.p.min() > 0 and orb.q.min() > 0
    assert abs(orb.p_at(1.0) - orb.p_at(0.0)) < 1e-10
    assert np.mean(cs.a1(orb.tgrid) * orb.p) == pytest.approx(r1.mean, abs=1e-8)
    assert np.mean(cs.b2(orb.tgrid) * orb.q) == pytest.approx(r2.mean, abs=1e-8)


@given(b1=st.floats(1.01, 1.9), a2=st.floats(1.01, 1.9))
@settings(max_examples=25, deadline=None)
def test_a2_implies_positive_mean_gaps(b1, a2):
    cs = ps_b().replace(b1=PeriodicFn.constant(b1), a2=PeriodicFn.constant(a2))
    rep = check_assumptions(cs)
    if rep.a2_ok:
        assert rep.extras["mean_b1q_minus_a1p"] > 0
        assert rep.extras["mean_a2p_minus_b2q"] > 0


def test_reaction_pack_constants(psa):
    _, _, pack = psa
    t = np.linspace(0, 1, 9)
    assert pack.N1(t) == pytest.approx(1.3)
    assert pack.N2(t) == pytest.approx(1.8)


def test_reaction_factored_zeros(psb):
    _, _, pack = psb
    t = np.linspace(0, 1, 11)[:, None]
    v = np.linspace(0, 1, 13)[None, :]
    assert np.all(pack.f(t, np.zeros_like(v), v) == 0)
    assert np.max(np.abs(pack.f(t, np.ones_like(v), np.ones_like(v)))) == 0


def test_cooperativity_sweep(psb):
    _, orb, pack = psb
    t = orb.tgrid[:, None, None]
    u = np.linspace(0, 1, 50)[None, :, None]
    v = np.linspace(0, 1, 50)[None, None, :]
    assert pack.f_v(t, u, v).min() >= 0
    assert pack.l_u(t, u, v).min() >= 0
    assert pack.g_v(t, u, v).min() >= 0
    assert pack.h_u(t, u, v).min() >= 0


@pytest.mark.parametrize("name, dname, wrt", [
    ("f", "f_u", 0), ("f", "f_v", 1), ("l", "l_u", 0), ("l", "l_v", 1),
    ("g", "g_u", 0), ("g", "g_v", 1), ("h", "h_u", 0), ("h", "h_v", 1),
])
def test_partials_match_finite_differences(psb, name, dname, wrt):
    _, _, pack = psb
    rng = np.random.default_rng(3)
    t, u, v = rng.uniform(0, 1, 50), rng.uniform(0, 1, 50), rng.uniform(0, 1, 50)
    e = 1e-6
    fn = getattr(pack, name)
    if wrt == 0:
        fd = (fn(t, u + e, v) - fn(t, u - e, v)) / (2 * e)
    else:
        fd = (fn(t, u, v + e) - fn(t, u, v - e)) / (2 * e)
    assert np.max(np.abs(getattr(pack, dname)(t, u, v) - fd)) < 1e-8


def test_transformed_form_is_conjugate(psb):
    """g(t,U,V) = -f(t,1-U,1-V) and h likewise for the decaying variables near (1,1)."""
    _, _, pack = psb
    rng = np.random.default_rng(4)
    t, u, v = rng.uniform(0, 1, 40), rng.uniform(0, 1, 40), rng.uniform(0, 1, 40)
    assert np.max(np.abs(pack.g(t, u, v) + pack.f(t, 1 - u, 1 - v))) < 1e-14
    assert np.max(np.abs(pack.h(t, u, v) + pack.l(t, 1 - u, 1 - v))) < 1e-14


def test_lipschitz_bound_dominates_jacobian(psb):
    _, orb, pack = psb
    t = orb.tgrid[:, None, None]
    u = np.linspace(0, 1, 21)[None, :, None]
    v = np.linspace(0, 1, 21)[None, None, :]
    r1 = np.abs(pack.f_u(t, u, v)) + np.abs(pack.f_v(t, u, v))
    r2 = np.abs(pack.l_u(t, u, v)) + np.abs(pack.l_v(t, u, v))
    assert max(r1.max(), r2.max()) <= pack.lipschitz_bound() + 1e-12
