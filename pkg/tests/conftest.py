import numpy as np
import pytest

from lvfronts.front import FrontOptions, compute_front
from lvfronts.kinetics import CoefficientSet, PeriodicFn, ReactionPack, compute_orbits
from lvfronts.pde import Grid1D

ACCEPTANCE_LINES: list = []


def ps_a(**kw) -> CoefficientSet:
    base = dict(r1=1.0, r2=1.0, a1=1.0, b2=1.0, b1=1.3, a2=1.8)
    base.update(kw)
    return CoefficientSet.constant(**base)


def ps_b() -> CoefficientSet:
    cs = ps_a()
    return cs.replace(r1=PeriodicFn(1.0, ((0.0, 0.3),), 1.0))


def ps_c() -> CoefficientSet:
    return ps_a(b1=1.5, a2=1.5)


DEFAULT_GRID = Grid1D(150.0, 0.05, 1e-3)
GRID60 = Grid1D(60.0, 0.05, 1e-3)


@pytest.fixture(scope="session")
def psa():
    cs = ps_a()
    orb = compute_orbits(cs)
    return cs, orb, ReactionPack(cs, orb)


@pytest.fixture(scope="session")
def psb():
    cs = ps_b()
    orb = compute_orbits(cs)
    return cs, orb, ReactionPack(cs, orb)


@pytest.fixture(scope="session")
def psb_front60(psb):
    cs, orb, pack = psb
    return compute_front(cs, orb, GRID60, FrontOptions(), pack=pack)


@pytest.fixture(scope="session")
def psa_front(psa):
    """PS-A front on the default grid."""
    cs, orb, pack = psa
    return compute_front(cs, orb, DEFAULT_GRID, FrontOptions(), pack=pack)


@pytest.fixture(scope="session")
def psa_front60(psa):
    """PS-A front on L = 60 (default h, dt), base for refinement and entire runs."""
    cs, orb, pack = psa
    return compute_front(cs, orb, GRID60, FrontOptions(), pack=pack)


def refined_front(psa, coarse, h, dt, stride):
    cs, orb, pack = psa
    opts = FrontOptions(initial=coarse, warmup_periods=5, record_stride=stride)
    return compute_front(cs, orb, Grid1D(coarse.meta["L"], h, dt), opts, pack=pack)


@pytest.fixture(scope="session")
def psa_front60_half(psa, psa_front60):
    """(h/2, dt/4) refinement, recorded at the coarse time spacing."""
    return refined_front(psa, psa_front60, 0.025, 2.5e-4, 4)


@pytest.fixture(scope="session")
def psa_front60_quarter(psa, psa_front60):
    """(h/4, dt/4) refinement."""
    return refined_front(psa, psa_front60, 0.0125, 2.5e-4, 4)


@pytest.fixture(scope="session")
def psa_env_setup(psa, psa_front60):
    """Spectral data, constants and K on the L = 60 front."""
    from lvfronts.asymptotics import estimate_front_constants, k_bounds
    from lvfronts.entire import shift_domain
    from lvfronts.spectral import spectral_pack
    cs, orb, _ = psa
    sp = spectral_pack(cs, orb, psa_front60.c)
    kb = k_bounds(estimate_front_constants(psa_front60, sp.nu3), cs, orb, psa_front60)
    return sp, kb, shift_domain(kb.K, psa_front60.c, sp.nu3)


@pytest.fixture(scope="session")
def psa_spectral(psa, psa_front):
    from lvfronts.spectral import spectral_pack
    cs, orb, _ = psa
    return spectral_pack(cs, orb, psa_front.c)


@pytest.fixture(scope="session")
def psa_kbounds(psa, psa_front, psa_spectral):
    from lvfronts.asymptotics import estimate_front_constants, k_bounds
    cs, orb, _ = psa
    cst = estimate_front_constants(psa_front, psa_spectral.nu3)
    return cst, k_bounds(cst, cs, orb, psa_front)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240611)


def record_acceptance(number: int, passed: bool, text: str) -> None:
    line = f"ACCEPTANCE {number:2d} {'PASS' if passed else 'FAIL'}: {text}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
