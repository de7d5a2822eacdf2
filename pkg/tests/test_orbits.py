import math

import numpy as np
import pytest

from melcert.catalog import (DuffingCubic, DuffingHardening, DuffingInner,
                             DuffingOuter)
from melcert.melnikov import closed_form_J, resonance_at, solve_resonance
from melcert.orbits import (NoSimpleZeroError, PeriodicOrbitResult,
                            StroboscopicMap, classify_multipliers,
                            energy_drift, find_subharmonic,
                            find_subharmonics, floquet,
                            pendulum_first_integrals, return_time,
                            reversibility_error, strobe, trajectory)

CASES = [(DuffingHardening(), 0.5), (DuffingCubic(), 1.3), (DuffingInner(1), 0.6),
         (DuffingInner(-1), 0.6), (DuffingOuter(), 0.85)]
IDS = ["a=1", "a=0", "inner+", "inner-", "outer"]


@pytest.fixture(scope="module")
def a0_pair():
    fam = DuffingCubic()
    spec = solve_resonance(fam, 1, 1, 1.0)
    smap = StroboscopicMap.for_family(fam, spec)
    return fam, spec, find_subharmonics(smap, fam, spec, 0.0, 1.0, 0.01, [0.0, math.pi])


def test_map_validation():
    with pytest.raises(ValueError):
        StroboscopicMap(a=1, nu=0.0)
    with pytest.raises(ValueError):
        StroboscopicMap(a=1, nu=1.0, rtol=0.0)
    smap = StroboscopicMap(a=0, nu=2.0, l=3, delta=0.2, eps=0.05)
    assert smap.period == pytest.approx(3 * math.pi)
    assert smap.trace() == pytest.approx(-0.01)


@pytest.mark.parametrize("fam,p", CASES, ids=IDS)
def test_unperturbed_resonant_orbit_is_fixed(fam, p):
    spec = resonance_at(fam, p, 1, 1)
    smap = StroboscopicMap.for_family(fam, spec)
    x0 = fam.initial_state(p)
    for phase in (0.0, 2.1):
        assert np.linalg.norm(strobe(smap, x0, phase) - x0) < 1e-9


def test_unperturbed_map_conserves_energy_off_resonance():
    fam = DuffingHardening()
    smap = StroboscopicMap(a=1, nu=1.37)
    x0 = fam.initial_state(0.4)
    x1 = strobe(smap, x0, 0.5)
    assert abs(smap.energy(x1) - smap.energy(x0)) < 1e-10
    assert np.linalg.norm(x1 - x0) > 1e-2


def test_dissipation_lowers_energy():
    smap = StroboscopicMap(a=1, nu=1.0, delta=0.5, beta=0.0, eps=0.05)
    for x0 in ([0.3, 0.0], [0.0, -1.0], [1.2, 0.4]):
        assert smap.energy(strobe(smap, x0)) < smap.energy(x0)


def test_reversibility():
    smap = StroboscopicMap(a=-1, nu=1.0, delta=0.1, beta=1.0, eps=0.05)
    assert reversibility_error(smap, [1.0, 0.2], 0.4) < 1e-9


def test_trajectory_samples():
    smap = StroboscopicMap(a=0, nu=1.0)
    t, x1, x2 = trajectory(smap, [1.0, 0.0], periods=2, samples=50)
    assert t.shape == x1.shape == x2.shape == (101,)
    assert t[-1] == pytest.approx(2 * smap.period)
    np.testing.assert_allclose([x1[-1], x2[-1]], strobe(smap, strobe(smap, [1.0, 0.0])), atol=1e-9)


def test_subharmonic_pair(a0_pair):
    fam, spec, (r0, rpi) = a0_pair
    smap = StroboscopicMap.for_family(fam, spec, delta=0.0, beta=1.0, eps=0.01)
    for r, phase in ((r0, 0.0), (rpi, math.pi)):
        assert r.residual < 1e-10
        assert r.phase == pytest.approx(phase, abs=1e-12)
        # independent re-integration of the found fixed point
        assert np.linalg.norm(strobe(smap, r.initial_state, r.phase) - r.initial_state) < 1e-9
        # O(eps) from the resonant energy level
        H0 = fam.hamiltonian(fam.initial_state(spec.param_star))
        assert abs(fam.hamiltonian(r.initial_state) - H0) < 10 * r.eps
    assert {r0.stability, rpi.stability} == {"elliptic", "hyperbolic_saddle"}


def test_conservative_multiplier_product(a0_pair):
    _, _, results = a0_pair
    for r in results:
        assert abs(np.prod(r.floquet_multipliers) - 1.0) < 1e-6


def test_dissipative_orbit_and_abel_identity():
    fam = DuffingCubic()
    spec = solve_resonance(fam, 1, 1, 1.0)
    delta, beta, eps = 0.1, 1.0, 0.02
    cf = closed_form_J(fam, spec)
    assert cf.has_simple_zero(delta, beta)
    smap = StroboscopicMap.for_family(fam, spec)
    r = find_subharmonic(smap, fam, spec, delta, beta, eps, 0.0)
    assert r.residual < 1e-10
    assert abs(cf(delta, beta, r.phase)) < 1e-12
    want = math.exp(-eps * delta * 2 * math.pi * spec.l / spec.nu)
    assert abs(np.prod(r.floquet_multipliers) - want) < 1e-6
    assert r.to_dict()["stability"] == r.stability


def test_no_simple_zero():
    fam = DuffingCubic()
    spec = solve_resonance(fam, 1, 1, 1.0)
    cf = closed_form_J(fam, spec)
    delta = 2 * abs(cf.J2 / cf.J1)
    smap = StroboscopicMap.for_family(fam, spec)
    with pytest.raises(NoSimpleZeroError):
        find_subharmonic(smap, fam, spec, delta, 1.0, 0.01)
    with pytest.raises(ValueError):
        find_subharmonic(smap, fam, spec, 0.0, 1.0, 0.2)


def test_monodromy_at_zero_eps_is_unipotent():
    fam = DuffingCubic()
    spec = solve_resonance(fam, 1, 1, 1.0)
    smap = StroboscopicMap.for_family(fam, spec)
    x0 = fam.initial_state(spec.param_star)
    res = PeriodicOrbitResult(x0, float(np.linalg.norm(strobe(smap, x0) - x0)), 0.0, 0.0)
    out = floquet(smap, res)
    m1, m2 = out.floquet_multipliers
    # both multipliers at 1: checked through the characteristic polynomial
    assert abs(m1 + m2 - 2) < 1e-6
    assert abs(m1 * m2 - 1) < 1e-6
    assert out.stability == "degenerate"
    with pytest.raises(ValueError):
        floquet(smap, PeriodicOrbitResult(x0, 1e-3, 0.0, 0.0))


def test_classify_multipliers():
    assert classify_multipliers([np.exp(0.3j), np.exp(-0.3j)]) == "elliptic"
    assert classify_multipliers([2.0, 0.5]) == "hyperbolic_saddle"
    assert classify_multipliers([0.9 * np.exp(0.3j), 0.9 * np.exp(-0.3j)]) == "node"
    assert classify_multipliers([0.5, 0.8]) == "node"
    assert classify_multipliers([1.0, 1.0]) == "degenerate"
    assert classify_multipliers([1 + 3e-5, 1 - 3e-5]) == "degenerate"


def test_parallel_seeds_match_serial(a0_pair):
    fam, spec, serial = a0_pair
    smap = StroboscopicMap.for_family(fam, spec)
    par = find_subharmonics(smap, fam, spec, 0.0, 1.0, 0.01, [0.0, math.pi], workers=2)
    for a, b in zip(serial, par):
        assert np.array_equal(a.initial_state, b.initial_state)


@pytest.mark.parametrize("fam,p", CASES, ids=IDS)
def test_return_time_matches_period(fam, p):
    assert return_time(fam, p) == pytest.approx(fam.period(p), abs=1e-8)


@pytest.mark.parametrize("fam,p", CASES, ids=IDS)
def test_energy_conservation(fam, p):
    assert energy_drift(fam, p, periods=100) < 1e-10


def test_pendulum_first_integrals():
    out = pendulum_first_integrals(kappa=0.5, eps=0.05)
    assert out["revolutions"] == 100
    assert out["corrected_drift"] < 1e-8
    assert out["printed_drift"] > 1e-3
