"""Subharmonic Melnikov functions, their closed forms for the Duffing
families, resonance solving and the real-period integral."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .catalog import (DuffingBundle, DuffingCubic, DuffingHardening,
                      DuffingInner, DuffingOuter)
from .elliptic import complete_elliptic_E, complete_elliptic_K
from .model import OrbitFamily, SystemModel, _periodic_trapezoid

__all__ = [
    "ResonanceSpec",
    "ResonanceError",
    "MelnikovClosedForm",
    "NoClosedFormError",
    "solve_resonance",
    "resonance_at",
    "melnikov_quadrature",
    "melnikov_integrand",
    "closed_form_J",
    "closed_form_I_hat",
    "real_period_integral",
]


class ResonanceError(ValueError):
    """No resonant orbit for the requested (l, n, nu), or invalid integers."""


class NoClosedFormError(ValueError):
    """The system has no printed closed form for this quantity."""


@dataclass(frozen=True)
class ResonanceSpec:
    l: int
    n: int
    nu: float
    param_star: float
    omega_star: float
    T_star: float

    def to_dict(self) -> dict:
        return {"l": self.l, "n": self.n, "nu": self.nu, "param_star": self.param_star,
                "omega_star": self.omega_star, "T_star": self.T_star}


def _family(obj) -> OrbitFamily:
    return obj.family if isinstance(obj, DuffingBundle) else obj


def _check_ln(l, n):
    if int(l) != l or int(n) != n or l < 1 or n < 1:
        raise ResonanceError("l and n must be positive integers")
    if math.gcd(int(l), int(n)) != 1:
        raise ResonanceError(f"l={l} and n={n} are not relatively prime")
    return int(l), int(n)


def resonance_at(family, param: float, l: int, n: int) -> ResonanceSpec:
    """Resonance spec with nu chosen so that n T(param) = 2 pi l / nu."""
    fam = _family(family)
    l, n = _check_ln(l, n)
    T = fam.period(param)
    nu = 2.0 * math.pi * l / (n * T)
    return ResonanceSpec(l, n, nu, float(param), nu / l, n * T)


def solve_resonance(family, l: int, n: int, nu: float, scan: int = 64,
                    interval: tuple | None = None) -> ResonanceSpec:
    """Find the family parameter at which n T(p) = 2 pi l / nu by bisection.

    A ``scan``-point pre-scan brackets the root and checks that T is
    monotone on the bracket.
    """
    fam = _family(family)
    l, n = _check_ln(l, n)
    nu = float(nu)
    if not nu > 0:
        raise ResonanceError("nu must be positive")
    target = 2.0 * math.pi * l / nu
    lo, hi = interval if interval is not None else fam.working
    ps = np.geomspace(lo, hi, scan) if fam.log_scale else np.linspace(lo, hi, scan)
    resid = np.array([n * fam.period(p) - target for p in ps])
    idx = np.flatnonzero(np.sign(resid[:-1]) * np.sign(resid[1:]) <= 0)
    if idx.size == 0:
        Ts = n * np.array([fam.period(p) for p in (ps[0], ps[-1])])
        raise ResonanceError(
            f"no resonance for l={l}, n={n}, nu={nu} on {fam.name}: "
            f"n*T spans [{Ts.min():.12g}, {Ts.max():.12g}] on the working interval but 2*pi*l/nu = {target:.12g}"
        )
    i = int(idx[0])
    a, b = float(ps[i]), float(ps[i + 1])
    fine = np.linspace(a, b, scan)
    Tf = np.array([fam.period(p) for p in fine])
    d = np.diff(Tf)
    if not (np.all(d > 0) or np.all(d < 0)):
        raise ResonanceError("period is not monotone on the resonance bracket")
    fa = n * fam.period(a) - target
    if fa == 0.0:
        p_star = a
    else:
        for _ in range(200):
            mid = 0.5 * (a + b)
            if b - a <= 1e-15 * max(1.0, abs(mid)):
                break
            fm = n * fam.period(mid) - target
            if fm == 0.0:
                a = b = mid
                break
            if (fm < 0) == (fa < 0):
                a, fa = mid, fm
            else:
                b = mid
        p_star = 0.5 * (a + b)
    return ResonanceSpec(l, n, nu, p_star, nu / l, target)


def melnikov_integrand(family, param, nu, delta, beta, t, phi):
    """DH(x(t)) . u(x(t), nu t + phi) with u = (0, beta cos - delta x2).

    ``t`` and ``phi`` broadcast against each other; ``t`` may be complex.
    """
    fam = _family(family)
    x = fam.orbit(param, t)
    x2 = x[1]
    grad = fam.energy_gradient(x)
    return grad[1] * (beta * np.cos(nu * t + phi) - delta * x2)


def melnikov_quadrature(family, spec: ResonanceSpec, delta: float, beta: float, phi,
                        tol: float = 1e-10):
    """M^{l/n}(phi): the Melnikov integrand over [0, 2 pi l / nu] by periodic trapezoid.

    ``phi`` may be a scalar or an array; the same nodes serve every phase.
    """
    phi_arr = np.atleast_1d(np.asarray(phi, dtype=float))

    def integrand(t):
        vals = melnikov_integrand(family, spec.param_star, spec.nu, delta, beta,
                                  t[:, None], phi_arr[None, :])
        return np.real(vals)

    out = _periodic_trapezoid(integrand, spec.T_star, tol)
    return float(out[0]) if np.ndim(phi) == 0 else out


@dataclass(frozen=True)
class MelnikovClosedForm:
    """M(phi) = -delta J1 + sign * beta J2 sin(phi)."""

    J1: float
    J2: float
    sign: int = 1

    def __call__(self, delta, beta, phi):
        return -delta * self.J1 + self.sign * beta * self.J2 * np.sin(phi)

    def has_simple_zero(self, delta, beta) -> bool:
        return abs(beta * self.J2) > abs(delta * self.J1)

    def zeros(self, delta, beta):
        """Zeros of M in [0, 2pi) (two when they exist, none otherwise)."""
        if not self.has_simple_zero(delta, beta):
            return []
        s = delta * self.J1 / (self.sign * beta * self.J2)
        z = math.asin(s)
        return sorted(v % (2 * math.pi) for v in (z, math.pi - z))


def closed_form_J(family, spec: ResonanceSpec) -> MelnikovClosedForm:
    """The printed J1/J2 (or J~1/J~2) expressions for the four Duffing families."""
    fam = _family(family)
    p, l, n, nu = spec.param_star, spec.l, spec.n, spec.nu
    if isinstance(fam, DuffingHardening) or isinstance(fam, DuffingOuter):
        k = p
        K, E = complete_elliptic_K(k), complete_elliptic_E(k)
        Kp = complete_elliptic_K(fam.modulus(k).k_prime)
        kp2 = 1.0 - k * k
        c3 = (1.0 - 2 * k * k) ** 1.5 if isinstance(fam, DuffingHardening) else (2 * k * k - 1.0) ** 1.5
        J1 = 8 * n * ((2 * k * k - 1) * E + kp2 * K) / (3 * c3)
        J2 = (2 * math.sqrt(2) * math.pi * nu / math.cosh(math.pi * l * Kp / (2 * K))
              if n == 1 and l % 2 == 1 else 0.0)
        return MelnikovClosedForm(J1, J2, 1)
    if isinstance(fam, DuffingCubic):
        K = complete_elliptic_K(1 / math.sqrt(2))
        J1 = 4 * n * p ** 3 * K / 3
        J2 = (2 * math.sqrt(2) * math.pi * nu / math.cosh(math.pi * l / 2)
              if n == 1 and l % 2 == 1 else 0.0)
        return MelnikovClosedForm(J1, J2, 1)
    if isinstance(fam, DuffingInner):
        k = p
        K, E = complete_elliptic_K(k), complete_elliptic_E(k)
        Kp = complete_elliptic_K(fam.modulus(k).k_prime)
        J1 = 4 * n * ((2 - k * k) * E - 2 * (1 - k * k) * K) / (3 * (2 - k * k) ** 1.5)
        J2 = math.sqrt(2) * math.pi * nu / math.cosh(math.pi * l * Kp / K) if n == 1 else 0.0
        return MelnikovClosedForm(J1, J2, fam.branch)
    raise NoClosedFormError(f"no closed-form Melnikov function for {getattr(fam, 'name', fam)!r}")


def closed_form_I_hat(family, spec: ResonanceSpec, beta: float, phi, *, upper: bool = False):
    """Closed forms for the loop integral of the Melnikov integrand.

    -/+ 2 sqrt2 pi nu beta (cosh(X) sin(phi) - i sinh(X) cos(phi)), with X
    = pi l K'/(2 n K) (a = 1, a = -1 outer), pi l/(2n) (a = 0) or
    pi l K'/(n K) (a = -1 inner, overall sign -branch).

    As printed, this is the counterclockwise loop around the pole in the
    lower half plane, -i c K'.  ``upper=True`` gives the loop around
    +i c K' instead, which is the same expression at -phi.
    """
    fam = _family(family)
    p, l, n, nu = spec.param_star, spec.l, spec.n, spec.nu
    sign = -1.0
    if isinstance(fam, (DuffingHardening, DuffingOuter)):
        K = complete_elliptic_K(p)
        X = math.pi * l * complete_elliptic_K(fam.modulus(p).k_prime) / (2 * n * K)
    elif isinstance(fam, DuffingCubic):
        X = math.pi * l / (2 * n)
    elif isinstance(fam, DuffingInner):
        K = complete_elliptic_K(p)
        X = math.pi * l * complete_elliptic_K(fam.modulus(p).k_prime) / (n * K)
        sign = -float(fam.branch)
    else:
        raise NoClosedFormError(f"no closed-form loop integral for {getattr(fam, 'name', fam)!r}")
    phi = np.asarray(phi, dtype=float)
    if upper:
        phi = -phi
    val = sign * 2 * math.sqrt(2) * math.pi * nu * beta * (
        math.cosh(X) * np.sin(phi) - 1j * math.sinh(X) * np.cos(phi))
    return complex(val) if val.ndim == 0 else val


def real_period_integral(system: SystemModel, I, theta, T_I: float, tol: float = 1e-10) -> np.ndarray:
    """Integral of h(I, omega(I) tau + theta; 0) over tau in [0, T_I].

    ``T_I`` must make every ``omega_j(I) T_I`` a multiple of 2 pi (to 1e-8).
    """
    I = np.asarray(I, dtype=float)
    w = system.frequencies(I)
    turns = w * T_I / (2 * math.pi)
    if np.max(np.abs(turns - np.round(turns))) > 1e-8:
        raise ValueError(f"omega(I) * T_I / 2pi = {turns} is not an integer vector")
    theta = np.asarray(theta, dtype=float)

    def integrand(tau):
        return np.real(system.h_along(I, theta, tau))

    return np.asarray(_periodic_trapezoid(integrand, float(T_I), tol), dtype=float)
