import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from melcert.catalog import (DuffingBundle, DuffingCubic, DuffingHardening,
                             DuffingInner, DuffingOuter, coupled_oscillators,
                             pendulum_torque)
from melcert.certificate import (CERTIFIED, INCONCLUSIVE, SCHEMA,
                                 ResonanceNotDetected, certify,
                                 certify_family, certify_system, check_A1,
                                 check_frequencies, compute_I_hat,
                                 compute_I_theta, place_loop_center)
from melcert.contour import (ContourSpec, ForbiddenLineError, default_contour,
                             integrate_loop)
from melcert.elliptic import complete_elliptic_K
from melcert.melnikov import (ResonanceError, melnikov_integrand,
                              resonance_at)
from melcert.model import SystemModel

CASES = [(DuffingHardening(), 0.5), (DuffingCubic(), 1.3), (DuffingInner(1), 0.6),
         (DuffingInner(-1), 0.6), (DuffingOuter(), 0.85)]
IDS = ["a=1", "a=0", "inner+", "inner-", "outer"]


def loop_for(fam, p):
    spec = resonance_at(fam, p, 1, 1)
    center, window = place_loop_center(fam.pole(p), spec.T_star)
    return spec, default_contour(center, fam.neighbours(p, center), window), window


def test_check_frequencies_examples():
    rec = check_frequencies([2.0, 1.0])
    assert rec.omega_star == 1.0 and rec.integers == (2, 1) and rec.residual == 0.0
    rec = check_A1(coupled_oscillators(ell=3), [1.0, 2.0, 2.0])
    assert rec.omega_star == pytest.approx(1.0) and rec.integers == (1, 2, 2)
    rec = check_frequencies([0.75, -0.5])
    assert rec.omega_star == pytest.approx(0.25) and rec.integers == (3, -2)
    with pytest.raises(ResonanceNotDetected):
        check_frequencies([1.0, math.sqrt(2)])
    with pytest.raises(ResonanceNotDetected):
        check_frequencies([0.0, 0.0])


@settings(max_examples=100, deadline=None)
@given(ints=st.lists(st.integers(-50, 50), min_size=1, max_size=5), scale=st.floats(1e-3, 1e3))
def test_check_frequencies_recovers_integers(ints, scale):
    if not any(ints):
        return
    g = math.gcd(*ints)
    rec = check_frequencies([scale * i for i in ints])
    w = np.array(ints) * scale
    assert np.allclose(np.array(rec.integers) * rec.omega_star, w, rtol=1e-12, atol=0)
    assert rec.omega_star == pytest.approx(scale * g, rel=1e-10)
    assert rec.residual < 1e-8


def test_I_theta_pendulum():
    kappa = 0.5
    sys = pendulum_torque(kappa)
    for I in (1.0, 2.0, 3.0):
        pole = sys.singularities([I], [0.0])[0]
        assert pole == pytest.approx(1j * math.acosh(1 / kappa) / I)
        center, window = place_loop_center(pole, 2 * math.pi / I)
        T = 2 * math.pi / I
        # every zero of 1 - kappa cos(I tau): +-i arccosh(1/kappa)/I + multiples of T
        near = [s * pole.imag * 1j + m * T for s in (1, -1) for m in range(-2, 4)]
        near = [z for z in near if abs(z - center) > 1e-12]
        spec = default_contour(center, near, window)
        val = compute_I_theta(sys, [I], [0.0], spec, window=window)
        # residue oracle: sin z0 / (kappa I sin z0) = 1 / (kappa I), times D omega = 1
        assert abs(val[0] - 2j * math.pi / (kappa * I)) < 1e-10


def test_I_theta_zero_perturbation():
    base = pendulum_torque(0.5)
    quiet = SystemModel(base.name, 1, 1, base.omega, base.d_omega,
                        lambda I, theta, eps=0.0: np.zeros((1,) + np.shape(theta)[1:]))
    val = compute_I_theta(quiet, [1.0], [0.0], ContourSpec(3 + 1j, 0.5))
    assert np.all(val == 0)


def test_I_theta_coupled_components():
    kappa, beta = 0.5, 1.0
    sys = coupled_oscillators(ell=4, beta=beta, kappa=kappa)
    cert = certify_system(sys, [1.0, 2.0, 2.0, 2.0])
    v = np.asarray(cert.I_hat_values[0], dtype=complex)
    omega_star = cert.resonance["omega_star"]
    assert omega_star == pytest.approx(1.0)
    assert abs(v[0] - 2j * math.pi * beta / (kappa * omega_star)) < 1e-9
    assert abs(v[1] + v[0]) < 1e-9
    assert np.max(np.abs(v[2:])) < 1e-10
    assert cert.verdict == CERTIFIED


def test_I_theta_rejects_forbidden_contour():
    sys = pendulum_torque(0.5)
    with pytest.raises(ForbiddenLineError):
        compute_I_theta(sys, [1.0], [0.0], ContourSpec(1.3j, 0.2), window=2 * math.pi)


@pytest.mark.parametrize("fam,p", CASES, ids=IDS)
def test_dissipation_part_vanishes(fam, p):
    spec, contour, window = loop_for(fam, p)
    phis = np.linspace(0, 2 * math.pi, 8, endpoint=False)
    vals = compute_I_hat(fam, spec, 1.0, 0.0, phis, contour, window=window)
    assert np.max(np.abs(vals)) < 1e-8


def test_inner_branches_opposite():
    spec, contour, window = loop_for(DuffingInner(1), 0.6)
    phis = np.linspace(0, 2 * math.pi, 8, endpoint=False)
    plus = compute_I_hat(DuffingInner(1), spec, 0.1, 1.0, phis, contour, window=window)
    minus = compute_I_hat(DuffingInner(-1), spec, 0.1, 1.0, phis, contour, window=window)
    assert np.max(np.abs(plus + minus)) < 1e-8 * np.max(np.abs(plus))


def test_I_hat_forbidden_line():
    fam = DuffingHardening()
    spec = resonance_at(fam, 0.5, 1, 1)
    pole = fam.pole(0.5)
    with pytest.raises(ForbiddenLineError):
        compute_I_hat(fam, spec, 0.1, 1.0, 0.0, ContourSpec(pole, 0.1))


def test_place_loop_center():
    T = 10.0
    assert place_loop_center(3 + 2j, T) == (3 + 2j, T)
    assert place_loop_center(23 + 2j, T) == (pytest.approx(3 + 2j), T)
    c, w = place_loop_center(2j, T)
    assert c == 10 + 2j and w == 20.0
    c, w = place_loop_center(9.5 + 1j, T)
    assert c == pytest.approx(9.5 + 1j) and w == 20.0
    c, w = place_loop_center(-0.5 + 1j, T)
    assert c == pytest.approx(9.5 + 1j) and w == 20.0


@pytest.mark.parametrize("fam,p", CASES, ids=IDS)
def test_certify_family_verdicts(fam, p):
    cert = certify_family(fam, param=p, phi_grid=16)
    assert cert.verdict == CERTIFIED
    assert cert.min_abs_I_hat > 1e-8
    assert cert.hypothesis_A1["residual"] < 1e-8
    assert cert.period_derivative["nonzero"]
    assert cert.checks["half_radius_difference"] < 1e-8 * max(1.0, cert.min_abs_I_hat)
    off = certify_family(fam, param=p, beta=0.0, phi_grid=16)
    assert off.verdict == INCONCLUSIVE
    assert off.min_abs_I_hat < 1e-8
    assert any("abs_tol" in note for note in off.notes)


def test_certify_a1_unit_frequency_is_unattainable():
    with pytest.raises(ResonanceError):
        certify_family(DuffingHardening(), nu=1.0)


def test_certify_sinh_lower_bound():
    k = 0.5
    cert = certify_family(DuffingHardening(), param=k, delta=0.1, beta=1.0)
    nu = cert.resonance["nu"]
    K, Kp = complete_elliptic_K(k), complete_elliptic_K(math.sqrt(1 - k * k))
    bound = 2 * math.sqrt(2) * math.pi * nu * math.sinh(math.pi * Kp / (2 * K))
    # phi = 0 lies on the grid and attains the bound
    assert abs(cert.min_abs_I_hat - bound) < 1e-6 * bound
    assert cert.checks["closed_form_min_abs"] == pytest.approx(bound, rel=1e-12)


@pytest.mark.parametrize("fam,p", CASES, ids=IDS)
def test_closed_form_relations(fam, p):
    cert = certify_family(fam, param=p, phi_grid=32)
    # the loop around the stated (upper) pole matches the closed form with phi -> -phi
    assert cert.checks["closed_form_error_upper_pole"] < 1e-6
    # the printed closed form itself is the loop around the conjugate pole
    assert cert.checks["closed_form_error_conjugate_loop"] < 1e-6
    assert cert.max_closed_form_error > 1.0
    assert any("conjugate pole" in note for note in cert.notes)


@pytest.mark.parametrize("fam,p", CASES, ids=IDS)
def test_trig_polynomial_fit(fam, p):
    cert = certify_family(fam, param=p, phi_grid=32)
    phi = np.array(cert.phi_grid)
    vals = np.array(cert.I_hat_values, dtype=complex)
    A = np.column_stack([np.sin(phi), np.cos(phi), np.ones_like(phi)])
    coef, *_ = np.linalg.lstsq(A, vals, rcond=None)
    resid = np.max(np.abs(A @ coef - vals))
    assert resid < 1e-8 * max(1.0, np.max(np.abs(vals)))
    assert abs(coef[2]) < 1e-8 * max(1.0, np.max(np.abs(vals)))


@pytest.mark.parametrize("fam,p", CASES, ids=IDS)
def test_conjugation(fam, p):
    spec, contour, window = loop_for(fam, p)
    for phi in (0.0, 1.3):
        f = lambda t: melnikov_integrand(fam, p, spec.nu, 0.1, 1.0, t, phi)
        val = integrate_loop(f, contour).value
        # reflected loop, traversed so that the reflection maps it onto itself
        mirror = integrate_loop(f, contour.mirrored(), orientation=-1).value
        assert abs(mirror - np.conj(val)) < 1e-8 * max(1.0, abs(val))


@pytest.mark.parametrize("fam,p", CASES, ids=IDS)
def test_radius_independence(fam, p):
    spec, contour, window = loop_for(fam, p)
    phis = np.linspace(0, 2 * math.pi, 6, endpoint=False)
    a = compute_I_hat(fam, spec, 0.1, 1.0, phis, contour, window=window)
    b = compute_I_hat(fam, spec, 0.1, 1.0, phis, contour.with_radius(0.3 * contour.radius), window=window)
    assert np.max(np.abs(a - b)) < 1e-8 * max(1.0, np.max(np.abs(a)))


def test_user_radius_checked():
    fam = DuffingHardening()
    cert = certify_family(fam, param=0.5, radius=0.2, phi_grid=8)
    assert cert.contour["radius"] == 0.2
    with pytest.raises(ValueError):
        certify_family(fam, param=0.5, radius=50.0, phi_grid=8)


def test_abs_tol_controls_verdict():
    cert = certify_family(DuffingCubic(), param=1.0, phi_grid=8, abs_tol=1e6)
    assert cert.verdict == INCONCLUSIVE


@pytest.mark.parametrize("I", [0.5, 1.0, 3.0, -2.0])
def test_certify_pendulum(I):
    kappa = 0.5
    cert = certify(pendulum_torque(kappa), I_star=[I])
    assert cert.verdict == CERTIFIED
    val = complex(cert.I_hat_values[0][0])
    assert abs(abs(val) - 2 * math.pi / (kappa * abs(I))) < 1e-9
    assert cert.closed_form_values is not None
    assert any("printed" in note for note in cert.notes)


def test_certificate_json():
    cert = certify_family(DuffingInner(-1), param=0.6, phi_grid=8)
    text = cert.to_json()
    doc = json.loads(text)
    assert doc["schema"] == SCHEMA
    for key in ("system", "resonance", "hypothesis_A1", "period_derivative", "contour",
                "phi_grid", "I_hat_values", "closed_form_values", "min_abs_I_hat",
                "max_closed_form_error", "verdict", "notes", "tolerances"):
        assert key in doc
    assert doc["verdict"] == CERTIFIED
    assert all(isinstance(v, list) and len(v) == 2 for v in doc["I_hat_values"])
    assert doc["contour"]["center"][0] != 0
    assert doc["forbidden_lines"][0] == 0.0
    again = certify_family(DuffingInner(-1), param=0.6, phi_grid=8)
    assert again.to_json() == text


def test_parallel_grid_is_deterministic():
    a = certify_family(DuffingOuter(), param=0.85, phi_grid=24, workers=1).to_json()
    b = certify_family(DuffingOuter(), param=0.85, phi_grid=24, workers=4).to_json()
    assert a == b


def test_certify_dispatch():
    assert certify(DuffingBundle(DuffingCubic()), param=1.0, phi_grid=4).certified
    with pytest.raises(TypeError):
        certify("duffing")
    with pytest.raises(KeyError):
        certify(pendulum_torque())
    with pytest.raises(ValueError):
        certify_family(DuffingCubic())
