import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import ps_a, ps_c
from lvfronts.entire import reflect_coefficients
from lvfronts.errors import ConvergenceError, PreconditionError, ZeroSpeedError
from lvfronts.front import (FrontOptions, compute_front, condition_ratios, d1_fd4, d2_fd4,
                            front_residual, harnack_ratio, interp_points, level_set, limits_ok,
                            monotone_ok, shift_nodes)
from lvfronts.kinetics import compute_orbits
from lvfronts.pde import Grid1D

COARSE = Grid1D(40.0, 0.1, 2e-3)


# ---------------------------------------------------------------- helpers

@given(s=st.floats(-3.0, 3.0), phase=st.floats(0, 2 * np.pi))
@settings(max_examples=40, deadline=None)
def test_shift_nodes_translates_smooth_data(s, phase):
    h = 0.05
    x = np.arange(-200, 201) * h
    y = np.sin(0.7 * x + phase)
    out = shift_nodes(y, s, 10)
    exact = np.sin(0.7 * (x - s * h) + phase)
    assert np.max(np.abs(out - exact)[20:-20]) < 1e-12


@pytest.mark.parametrize("k", [-3, 0, 2, 5])
def test_shift_nodes_integer_is_lattice_translation(k):
    y = np.random.default_rng(k + 10).normal(size=60)
    out = shift_nodes(y, k, 10)
    assert np.allclose(out[10:-10], np.roll(y, k)[10:-10], atol=1e-13, rtol=0)


@given(c=st.lists(st.floats(-2, 2), min_size=4, max_size=4),
       z=st.lists(st.floats(-0.99, 0.99), min_size=1, max_size=10))
@settings(max_examples=40, deadline=None)
def test_interp_points_exact_on_cubics(c, z):
    h = 0.1
    x = -1.2 + h * np.arange(25)
    y = np.polyval(c, x)
    z = np.asarray(z)
    assert np.max(np.abs(interp_points(y, x[0], h, z, 4) - np.polyval(c, z))) < 1e-11


def test_interp_points_limits_beyond_grid():
    y = np.linspace(0.1, 0.9, 9)
    out = interp_points(y, 0.0, 1.0, [-1.0, 20.0], 4, 0.0, 1.0)
    assert list(out) == [0.0, 1.0]


@pytest.mark.parametrize("deriv, exact", [(d1_fd4, np.cos), (d2_fd4, lambda x: -np.sin(x))])
def test_fd4_interior_order(deriv, exact):
    errs = []
    for h in (0.1, 0.05):
        x = np.arange(0.0, 3.0 + h / 2, h)
        d = deriv(np.sin(x), h)
        errs.append(np.max(np.abs(d - exact(x))[4:-4]))
    assert np.log2(errs[0] / errs[1]) > 3.8


def test_d1_fd4_boundary_order():
    errs = []
    for h in (0.1, 0.05):
        x = np.arange(0.0, 3.0 + h / 2, h)
        errs.append(np.max(np.abs(d1_fd4(np.sin(x), h) - np.cos(x))))
    assert np.log2(errs[0] / errs[1]) > 3.5


def test_level_set_exact_for_linear():
    x = np.linspace(-2, 2, 41)
    assert level_set(0.25 * x + 0.5 - 0.0123, x) == pytest.approx(0.0492, abs=1e-12)


# ---------------------------------------------------------------- PS-A front

def test_front_converged(psa, psa_front):
    cs, orb, pack = psa
    sp = psa_front.speed
    assert sp.converged and sp.drift <= 1e-9
    assert monotone_ok(psa_front) and limits_ok(psa_front)
    assert front_residual(psa_front, cs, orb, pack=pack) <= 5e-4


def test_front_phase_normalized(psa_front):
    assert psa_front.evaluate(0.0, np.array([0.0]))[0] == pytest.approx(0.5, abs=1e-8)
    assert psa_front.P.min() >= 0 and psa_front.P.max() <= 1


def test_level_set_speed_matches_shift_speed(psa_front):
    assert abs(psa_front.speed.c_level_set - psa_front.c) <= 1e-4
    assert psa_front.c < 0


def test_harnack_constant_coefficients(psa_front):
    assert 1.0 <= harnack_ratio(psa_front) <= 1 + 1e-3


def test_condition_ratios_positive(psa_front):
    eta0, eta1 = condition_ratios(psa_front)
    assert eta0 > 0 and eta1 > 0


def test_residual_detects_corruption(psa, psa_front60):
    cs, orb, pack = psa
    base = front_residual(psa_front60, cs, orb, pack=pack)
    P = psa_front60.P.copy()
    P[3, P.shape[1] // 2] += 1e-2
    bad = dataclasses.replace(psa_front60, P=P)
    assert front_residual(bad, cs, orb, pack=pack) >= 100 * base


def test_equilibrium_profile_has_zero_residual(psa, psa_front60):
    cs, orb, pack = psa
    z = np.zeros_like(psa_front60.P)
    flat = dataclasses.replace(psa_front60, P=z, Q=z, Pz=z, Qz=z)
    assert front_residual(flat, cs, orb, pack=pack) == 0.0


def test_front_independent_of_warmup(psa):
    """After phase normalization the profile does not depend on the transient length."""
    cs, orb, pack = psa
    a = compute_front(cs, orb, COARSE, FrontOptions(warmup_periods=60), pack=pack)
    b = compute_front(cs, orb, COARSE, FrontOptions(warmup_periods=90), pack=pack)
    z = np.linspace(-15, 15, 301)
    assert abs(a.c - b.c) <= 1e-7
    for t in (0.0, 0.3, 0.7):
        for nm in "PQ":
            assert np.max(np.abs(a.evaluate(t, z, nm) - b.evaluate(t, z, nm))) <= 1e-6


def test_species_swap_reverses_speed(psa):
    cs, orb, pack = psa
    a = compute_front(cs, orb, COARSE, pack=pack)
    R = reflect_coefficients(cs)
    b = compute_front(R, compute_orbits(R), COARSE)
    assert abs(a.c + b.c) <= 1e-4


def test_psb_harnack_stable_under_refinement(psb, psb_front60):
    cs, orb, pack = psb
    coarse = compute_front(cs, orb, Grid1D(60.0, 0.1, 2e-3), pack=pack)
    h0, h1 = harnack_ratio(coarse), harnack_ratio(psb_front60)
    assert np.isfinite(h1) and h1 > 1
    assert abs(h0 - h1) <= 0.02 * h1


# ---------------------------------------------------------------- failures

def test_balanced_case_zero_speed():
    cs = ps_c()
    with pytest.raises(ZeroSpeedError) as ei:
        compute_front(cs, compute_orbits(cs), COARSE)
    assert abs(ei.value.speed) <= 1e-6 * 2 * COARSE.L


@pytest.mark.parametrize("grid, opts", [
    (Grid1D(10.0, 0.1, 3e-3), FrontOptions()),
    (Grid1D(10.0, 0.1, 2e-3), FrontOptions(record_stride=3)),
], ids=["period-not-multiple-of-dt", "stride-not-divisor"])
def test_front_preconditions(psa, grid, opts):
    cs, orb, pack = psa
    with pytest.raises(PreconditionError):
        compute_front(cs, orb, grid, opts, pack=pack)


def test_front_convergence_failure_reported():
    cs = ps_a()
    with pytest.raises(ConvergenceError):
        compute_front(cs, compute_orbits(cs), COARSE, FrontOptions(warmup_periods=5, max_periods=3))
