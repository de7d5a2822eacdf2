"""Nonintegrability certificates: resonance checks, the loop integrals
I(theta) and I_hat(phi), closed-form comparison and a verdict."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce

import numpy as np

from . import __version__
from .catalog import DuffingBundle
from .contour import (FORBIDDEN_MARGIN, ContourSpec, ForbiddenLineError,
                      default_contour, integrate_loop, respects_forbidden_lines)
from .jsonio import dumps
from .melnikov import (NoClosedFormError, ResonanceSpec, closed_form_I_hat,
                       melnikov_integrand, resonance_at, solve_resonance)
from .model import OrbitFamily, SystemModel

__all__ = [
    "CERTIFIED",
    "INCONCLUSIVE",
    "SCHEMA",
    "A1Record",
    "ResonanceNotDetected",
    "Certificate",
    "check_frequencies",
    "check_A1",
    "compute_I_theta",
    "compute_I_hat",
    "place_loop_center",
    "certify_family",
    "certify_system",
    "certify",
]

CERTIFIED = "certified_nonintegrable_on_grid"
INCONCLUSIVE = "inconclusive"
SCHEMA = "cert-v1"
ABS_TOL = 1e-8
A1_TOL = 1e-8
DT_TOL = 1e-8
MAX_DENOMINATOR = 10 ** 6


class ResonanceNotDetected(ValueError):
    """The frequency ratios are not rational within the denominator bound."""


@dataclass(frozen=True)
class A1Record:
    frequencies: tuple
    omega_star: float
    integers: tuple
    residual: float

    def to_dict(self) -> dict:
        return {"frequencies": list(self.frequencies), "omega_star": self.omega_star,
                "integers": list(self.integers), "residual": self.residual}


def check_frequencies(omega, max_denominator: int = MAX_DENOMINATOR, tol: float = A1_TOL) -> A1Record:
    """Find omega* > 0 with omega / omega* an integer vector.

    Each ratio omega_j / omega_ref is replaced by its best rational
    approximation with denominator at most ``max_denominator``.
    """
    w = np.asarray(omega, dtype=float).reshape(-1)
    nz = np.flatnonzero(w != 0.0)
    if nz.size == 0 or not np.all(np.isfinite(w)):
        raise ResonanceNotDetected("frequency vector is zero or not finite")
    ref = w[nz[0]]
    fracs = [Fraction(float(r)).limit_denominator(max_denominator) for r in w / ref]
    L = reduce(math.lcm, (f.denominator for f in fracs), 1)
    ints = [int(f * L) for f in fracs]
    g = reduce(math.gcd, (abs(i) for i in ints), 0)
    ints = [i // g for i in ints]
    omega_star = abs(ref) * g / L
    if ref < 0:
        ints = [-i for i in ints]
    residual = float(np.max(np.abs(w / omega_star - np.array(ints, dtype=float))))
    if residual > tol:
        raise ResonanceNotDetected(
            f"frequencies {w.tolist()} are not commensurate: best integer fit leaves residual {residual:.3g}"
        )
    return A1Record(tuple(float(x) for x in w), float(omega_star), tuple(ints), residual)


def check_A1(system: SystemModel, I_star) -> A1Record:
    return check_frequencies(system.frequencies(I_star))


def _check_window(contour: ContourSpec, window):
    if window is not None and not respects_forbidden_lines(contour, window):
        raise ForbiddenLineError(
            f"loop |z - {contour.center}| = {contour.radius} meets i*R or {window} + i*R"
        )


def compute_I_theta(system: SystemModel, I_star, theta, spec: ContourSpec, *,
                    window: float | None = None) -> np.ndarray:
    """D omega(I*) times the componentwise loop integral of h(I*, omega(I*) tau + theta; 0)."""
    _check_window(spec, window)
    I_star = np.asarray(I_star, dtype=float)
    res = integrate_loop(lambda tau: system.h_along(I_star, theta, tau), spec)
    return system.jacobian(I_star).astype(complex) @ np.asarray(res.value, dtype=complex).reshape(-1)


def compute_I_hat(family, spec: ResonanceSpec, delta: float, beta: float, phi,
                  contour: ContourSpec, *, window: float | None = None):
    """Loop integral over complex time of DH(x(tau)) . u(x(tau), nu tau + phi).

    ``phi`` may be an array; the loop is then shared by every phase.
    ``window`` (default T*) fixes the forbidden lines i*R and window + i*R.
    """
    _check_window(contour, spec.T_star if window is None else window)
    phis = np.atleast_1d(np.asarray(phi, dtype=float))
    val = _unchecked_I_hat(family, spec, delta, beta, phis, contour)
    return complex(val[0]) if np.ndim(phi) == 0 else val


def place_loop_center(pole: complex, T_star: float) -> tuple:
    """Translate ``pole`` by multiples of T* so the loop can stay off the forbidden lines.

    The integrands are T*-periodic, so the translated loop gives the same
    value.  Returns ``(center, window)``: if the reduced real part sits
    within T*/8 of i*R or T* + i*R, the center is moved next to T* and the
    forbidden lines become i*R and 2T* + i*R (the resonance then read with
    omega*/2, which multiplies every integer vector by 2).
    """
    pole = complex(pole)
    r = pole.real % T_star
    if min(r, T_star - r) >= T_star / 8:
        return complex(r, pole.imag), T_star
    if r < T_star / 2:
        r += T_star
    return complex(r, pole.imag), 2.0 * T_star


def _loop_for(center, neighbours, window, radius, tol):
    if radius is None:
        return default_contour(center, neighbours, t_star=window, tol=tol)
    spec = ContourSpec(center, radius, tol=tol)
    if neighbours:
        nearest = min(abs(complex(z) - center) for z in neighbours)
        if radius >= nearest - FORBIDDEN_MARGIN:
            raise ValueError(f"radius {radius} reaches the next singularity at distance {nearest:.6g}")
    return spec


@dataclass
class Certificate:
    system: dict
    resonance: dict
    hypothesis_A1: dict | None
    period_derivative: dict | None
    contour: dict
    window: float
    phi_grid: list
    I_hat_values: list
    closed_form_values: list | None
    min_abs_I_hat: float
    max_closed_form_error: float | None
    verdict: str
    notes: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.verdict == CERTIFIED

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "tool_version": __version__,
            "system": self.system,
            "resonance": self.resonance,
            "hypothesis_A1": self.hypothesis_A1,
            "period_derivative": self.period_derivative,
            "contour": self.contour,
            "forbidden_lines": [0.0, self.window],
            "phi_grid": self.phi_grid,
            "I_hat_values": self.I_hat_values,
            "closed_form_values": self.closed_form_values,
            "min_abs_I_hat": self.min_abs_I_hat,
            "max_closed_form_error": self.max_closed_form_error,
            "checks": self.checks,
            "tolerances": self.tolerances,
            "config": self.config,
            "verdict": self.verdict,
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())


def _verdict(min_abs, a1_residual, dT, contour_ok, abs_tol):
    ok = (min_abs > abs_tol and a1_residual is not None and a1_residual < A1_TOL
          and (dT is None or abs(dT) > DT_TOL) and contour_ok)
    return CERTIFIED if ok else INCONCLUSIVE


def _grid(size: int) -> np.ndarray:
    if size < 1:
        raise ValueError("phi grid needs at least one point")
    return 2.0 * math.pi * np.arange(size) / size


def _parallel(fn, grid, workers):
    """fn applied to each grid point separately, so results do not depend on ``workers``."""
    workers = max(1, int(workers or 1))
    singles = [grid[i:i + 1] for i in range(grid.size)]
    if workers == 1:
        parts = [fn(x) for x in singles]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(fn, singles))
    return np.concatenate(parts)


def _rel_errors(num, ref, abs_tol):
    # relative where the reference is visibly nonzero, absolute elsewhere
    diff = np.abs(num - ref)
    scale = np.abs(ref)
    return np.where(scale > abs_tol, diff / np.where(scale > abs_tol, scale, 1.0), diff)


def certify_family(target, l: int = 1, n: int = 1, *, nu: float | None = None,
                   param: float | None = None, delta: float = 0.1, beta: float = 1.0,
                   phi_grid: int = 64, radius: float | None = None, abs_tol: float = ABS_TOL,
                   tol: float = 1e-10, workers: int | None = 1) -> Certificate:
    """Certificate for a planar orbit family under u = (0, beta cos(nu t + phi) - delta x2).

    The resonance is fixed either by ``nu`` (solved for the family
    parameter) or by ``param`` (nu chosen to make it resonant).
    """
    bundle = target if isinstance(target, DuffingBundle) else DuffingBundle(target)
    fam = bundle.family
    if (nu is None) == (param is None):
        raise ValueError("give exactly one of nu or param")
    spec = solve_resonance(fam, l, n, nu) if nu is not None else resonance_at(fam, param, l, n)
    p = spec.param_star
    notes = []

    freqs = (2.0 * math.pi / fam.period(p), spec.nu)
    try:
        a1 = check_frequencies(freqs)
        a1_dict, a1_res = a1.to_dict(), a1.residual
    except ResonanceNotDetected as exc:
        a1_dict, a1_res = None, None
        notes.append(f"resonance check failed: {exc}")

    dT = float(fam.d_period(p))
    period_derivative = {"value": dT, "nonzero": abs(dT) > DT_TOL, "param": fam.param_name}

    pole = fam.pole(p)
    center, window = place_loop_center(pole, spec.T_star)
    neighbours = fam.neighbours(p, center)
    contour = _loop_for(center, neighbours, window, radius, tol)
    contour_ok = respects_forbidden_lines(contour, window)
    if center != pole:
        notes.append(
            f"loop centre moved from the pole {pole.real:.17g}{pole.imag:+.17g}i by "
            f"{(center - pole).real:.17g} along the real axis (integrand is T*-periodic)"
        )
    if window != spec.T_star:
        notes.append("forbidden lines taken at 0 and 2T*: the resonance is read with omega*/2")
    if fam.a == 0:
        notes.append("pole of the alpha-family at i K(1/sqrt2)/alpha (argument alpha t); "
                     "it equals i alpha K(1/sqrt2) only at alpha = 1")

    phis = _grid(phi_grid)

    values = _parallel(lambda chunk: _unchecked_I_hat(fam, spec, delta, beta, chunk, contour),
                       phis, workers)
    min_abs = float(np.min(np.abs(values)))

    checks = {}
    closed = None
    max_err = None
    try:
        printed = np.asarray(closed_form_I_hat(fam, spec, beta, phis), dtype=complex)
        upper = np.asarray(closed_form_I_hat(fam, spec, beta, phis, upper=True), dtype=complex)
    except NoClosedFormError:
        printed = None
    if printed is not None:
        closed = printed.tolist()
        max_err = float(np.max(_rel_errors(values, printed, abs_tol)))
        upper_err = float(np.max(_rel_errors(values, upper, abs_tol)))
        mirrored = _unchecked_I_hat(fam, spec, delta, beta, phis, contour.mirrored())
        conj_err = float(np.max(_rel_errors(mirrored, printed, abs_tol)))
        X_bound = float(np.min(np.abs(upper)))
        checks.update({
            "closed_form_error_upper_pole": upper_err,
            "closed_form_error_conjugate_loop": conj_err,
            "closed_form_min_abs": X_bound,
        })
        if max_err > 1e-6:
            notes.append(
                "closed form disagrees with the loop around the stated pole "
                f"(max rel. error {max_err:.3g}); it matches the counterclockwise loop around the "
                f"conjugate pole to {conj_err:.3g}, and with phi -> -phi the stated pole to {upper_err:.3g}"
            )

    contour_dict = contour.to_dict()
    radius_check = _unchecked_I_hat(fam, spec, delta, beta, phis[:4], contour.with_radius(contour.radius / 2))
    checks["half_radius_difference"] = float(np.max(np.abs(radius_check - values[:4])))
    if not contour_ok:
        notes.append("loop violates the forbidden-line condition")
    if not period_derivative["nonzero"]:
        notes.append("period derivative vanishes at the resonant orbit")

    verdict = _verdict(min_abs, a1_res, dT, contour_ok, abs_tol)
    if verdict == INCONCLUSIVE and min_abs <= abs_tol:
        notes.append(f"min |I_hat| = {min_abs:.3g} does not exceed abs_tol = {abs_tol:g}")

    return Certificate(
        system={"id": bundle.name, "a": fam.a, "parameter": fam.param_name},
        resonance=spec.to_dict(),
        hypothesis_A1=a1_dict,
        period_derivative=period_derivative,
        contour=contour_dict,
        window=float(window),
        phi_grid=phis.tolist(),
        I_hat_values=values.tolist(),
        closed_form_values=closed,
        min_abs_I_hat=min_abs,
        max_closed_form_error=max_err,
        verdict=verdict,
        notes=notes,
        checks=checks,
        tolerances={"abs_tol": abs_tol, "quadrature_tol": tol, "a1_tol": A1_TOL,
                    "period_derivative_tol": DT_TOL, "max_denominator": MAX_DENOMINATOR},
        config={"l": spec.l, "n": spec.n, "nu": nu, "param": param, "delta": delta, "beta": beta,
                "phi_grid": phi_grid, "radius": radius},
    )


def _unchecked_I_hat(fam, spec, delta, beta, phis, contour):
    def f(tau):
        return melnikov_integrand(fam, spec.param_star, spec.nu, delta, beta,
                                  tau[:, None], phis[None, :])

    return np.asarray(integrate_loop(f, contour).value, dtype=complex).reshape(-1)


def _system_neighbours(system, I_star, theta, center, T_star):
    sing = system.singularities(I_star, theta) if system.singularities else []
    out = []
    for s in sing:
        for j in (-1, 0, 1, 2):
            z = complex(s) + j * T_star
            if abs(z - center) > 1e-9 * max(1.0, T_star):
                out.append(z)
    return sing, out


def certify_system(system: SystemModel, I_star, thetas=None, *, radius: float | None = None,
                   abs_tol: float = ABS_TOL, tol: float = 1e-10) -> Certificate:
    """Certificate for an action-angle system at the resonant actions ``I_star``.

    The loop encloses the first entry of ``system.singularities``; each
    theta in ``thetas`` gives one vector I(theta).
    """
    I_star = np.atleast_1d(np.asarray(I_star, dtype=float))
    if I_star.shape != (system.dim_action,):
        raise ValueError(f"I_star needs {system.dim_action} entries")
    if system.singularities is None:
        raise ValueError(f"system {system.name!r} lists no singularities to loop around")
    notes = []
    a1 = check_A1(system, I_star)
    a1_dict, a1_res = a1.to_dict(), a1.residual
    T_star = 2.0 * math.pi / a1.omega_star
    if thetas is None:
        thetas = [system.params.get("default_theta", [0.0] * system.dim_angle)]
    thetas = [np.asarray(t, dtype=float).reshape(system.dim_angle) for t in thetas]

    values, contours, printed_vals = [], [], []
    window_used = T_star
    contour_ok = True
    for theta in thetas:
        sing = system.singularities(I_star, theta)
        if not sing:
            raise ValueError("no singularity on the complexified orbit")
        center, window = place_loop_center(sing[0], T_star)
        _, neighbours = _system_neighbours(system, I_star, theta, center, T_star)
        contour = _loop_for(center, neighbours, window, radius, tol)
        contour_ok &= respects_forbidden_lines(contour, window)
        window_used = max(window_used, window)
        res = integrate_loop(lambda tau: system.h_along(I_star, theta, tau), contour)
        vec = system.jacobian(I_star).astype(complex) @ np.asarray(res.value, dtype=complex).reshape(-1)
        values.append(vec)
        contours.append(contour)
        if system.printed_integral is not None:
            printed_vals.append(np.asarray(system.printed_integral(I_star, theta), dtype=complex))

    norms = [float(np.linalg.norm(v)) for v in values]
    min_abs = min(norms)
    checks = {}
    closed = None
    max_err = None
    if printed_vals:
        closed = [v.tolist() for v in printed_vals]
        max_err = float(max(np.max(_rel_errors(v, pv, abs_tol)) for v, pv in zip(values, printed_vals)))
        checks["printed_values_nonzero"] = bool(all(np.linalg.norm(pv) > abs_tol for pv in printed_vals))
        if max_err > 1e-6:
            notes.append(
                f"printed loop-integral values differ from the computed ones (max rel. error {max_err:.3g}); "
                "both are nonzero, and the verdict uses the computed values"
            )
        else:
            notes.append(f"printed loop-integral values agree with the computed ones (max rel. error {max_err:.3g})")
    if window_used != T_star:
        notes.append("forbidden lines taken at 0 and 2T*: the resonance is read with omega*/2")
    verdict = _verdict(min_abs, a1_res, None, contour_ok, abs_tol)
    if not contour_ok:
        notes.append("loop violates the forbidden-line condition")
    if verdict == INCONCLUSIVE and min_abs <= abs_tol:
        notes.append(f"min |I(theta)| = {min_abs:.3g} does not exceed abs_tol = {abs_tol:g}")

    return Certificate(
        system={"id": system.name, "params": {k: v for k, v in system.params.items()}},
        resonance={"I_star": I_star.tolist(), "omega_star": a1.omega_star, "T_star": T_star},
        hypothesis_A1=a1_dict,
        period_derivative=None,
        contour=contours[0].to_dict() if len(contours) == 1 else [c.to_dict() for c in contours],
        window=float(window_used),
        phi_grid=[t.tolist() for t in thetas],
        I_hat_values=[v.tolist() for v in values],
        closed_form_values=closed,
        min_abs_I_hat=min_abs,
        max_closed_form_error=max_err,
        verdict=verdict,
        notes=notes,
        checks=checks,
        tolerances={"abs_tol": abs_tol, "quadrature_tol": tol, "a1_tol": A1_TOL,
                    "max_denominator": MAX_DENOMINATOR},
        config={"I_star": I_star.tolist(), "radius": radius},
    )


def certify(target, **kwargs) -> Certificate:
    """Dispatch to :func:`certify_family` or :func:`certify_system`."""
    if isinstance(target, (DuffingBundle, OrbitFamily)):
        return certify_family(target, **kwargs)
    if isinstance(target, SystemModel):
        I_star = kwargs.pop("I_star")
        return certify_system(target, I_star, **kwargs)
    raise TypeError(f"cannot certify {type(target).__name__}")
